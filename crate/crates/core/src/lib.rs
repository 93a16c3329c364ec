//! Thermodynamic formalism on finite presentations.

pub mod cocycle;
pub mod duality;
pub mod equilibrium;
pub mod error;
pub mod measures;
pub mod mp_transitions;
pub mod par;
pub mod pressure;
pub mod report;
pub mod symbolic;
pub mod zerotemp;

pub use error::{Error, Result};

/// Crate version, reported in CLI summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
