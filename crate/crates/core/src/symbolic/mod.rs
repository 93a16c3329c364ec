//! Finite presentations: subshifts of finite type, cylinder spaces,
//! beta-shift approximants and piecewise-monotone interval maps.

mod beta;
mod cylinders;
mod interval;
mod sft;

pub use beta::{build_beta_shift, BetaShiftSpec, MAX_BETA_DEPTH};
pub use cylinders::CylinderSpace;
pub use interval::{
    build_manneville_pomeau, doubling_map, Branch, BranchMap, IntervalMapSystem, Trend,
};
pub use sft::{build_sft, format_symbols, HigherBlock, SftSystem, Word, WordTable, DEFAULT_WORD_CAP};
