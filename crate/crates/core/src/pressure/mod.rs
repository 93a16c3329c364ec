//! Pressure engines: exact Perron roots, separated-set sums and
//! transfer-operator brackets, with the axiom checks they share.

mod axioms;
mod matrix;
pub mod perron;
mod separated;
mod transfer;

pub use axioms::{
    axiom_suite, coboundary_invariance_check, AxiomReport, CoboundaryReport, MatrixEngine, PressureEngine,
    SeparatedEngine, TransferEngine, Evaluation,
};
pub use matrix::{matrix_pressure, topological_entropy, weighted_matrix};
pub use perron::{perron, PerronData};
pub use separated::{separated_set_pressure, separated_set_pressure_capped};
pub use transfer::{
    build_geometries, nested_brackets, transfer_bracket, transfer_operator_pressure,
    transfer_operator_pressure_with, BranchPotential, TransferGeometry, TransferOptions, WarmStart,
    MAX_TRANSFER_DEPTH,
};

use crate::report::{csv_row, fmt12};

/// Finite-depth approximants of a pressure with a two-sided bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureEstimate {
    pub value: f64,
    pub depth_sequence: Vec<(usize, f64)>,
    /// `(lower, upper)` at each entry of `depth_sequence`.
    pub depth_brackets: Vec<(f64, f64)>,
    pub bracket: (f64, f64),
}

impl PressureEstimate {
    pub fn width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.bracket.0 <= x && x <= self.bracket.1
    }

    /// CSV with header `n,value_n,lower,upper`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value_n,lower,upper\n");
        for (&(n, v), &(lo, hi)) in self.depth_sequence.iter().zip(&self.depth_brackets) {
            out.push_str(&csv_row([n.to_string(), fmt12(v), fmt12(lo), fmt12(hi)]));
        }
        out
    }
}
