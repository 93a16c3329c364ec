use thiserror::Error;

/// Errors raised by the systems, engines and checks in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol {symbol} has no successor or no predecessor")]
    EmptyRowOrColumn { symbol: usize },
    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),
    #[error("combinatorial overflow: {count} words exceed the cap of {cap}")]
    CombinatorialOverflow { count: u128, cap: u64 },
    #[error("degenerate beta {0}: must satisfy 1 < beta <= 10")]
    DegenerateBeta(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("word of length {len} is too short, need at least {needed}")]
    WordTooShort { len: usize, needed: usize },
    #[error("word is not admissible at position {position}")]
    InadmissibleWord { position: usize },
    #[error("objects live on different systems")]
    SystemMismatch,
    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: usize, right: usize },
    #[error("transition structure is not irreducible")]
    NotIrreducible,
    #[error("no convergence after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("measure gives zero weight to words the optimizer needs")]
    SupportMismatch,
    #[error("branch {branch} is not full (does not map onto [0,1])")]
    NonFullBranch { branch: usize },
    #[error("branch {branch} has a derivative that is not monotone")]
    NonMonotoneDerivative { branch: usize },
    #[error("interval map invalid: {0}")]
    InvalidIntervalMap(String),
    #[error("exponent overflow guard: t * sup|phi| = {0} exceeds 700")]
    OverflowGuard(f64),
    #[error("matrix product is numerically singular")]
    SingularProduct,
    #[error("measure is not irreducible")]
    NonIrreducibleMeasure,
    #[error("depth {depth} exceeds the maximum {max}")]
    DepthOverflow { depth: usize, max: usize },
}

impl Error {
    /// Stable variant name, used in CLI summaries.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptyRowOrColumn { .. } => "EmptyRowOrColumn",
            Error::InvalidTransition(_) => "InvalidTransition",
            Error::CombinatorialOverflow { .. } => "CombinatorialOverflow",
            Error::DegenerateBeta(_) => "DegenerateBeta",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::WordTooShort { .. } => "WordTooShort",
            Error::InadmissibleWord { .. } => "InadmissibleWord",
            Error::SystemMismatch => "SystemMismatch",
            Error::DepthMismatch { .. } => "DepthMismatch",
            Error::NotIrreducible => "NotIrreducible",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::SupportMismatch => "SupportMismatch",
            Error::NonFullBranch { .. } => "NonFullBranch",
            Error::NonMonotoneDerivative { .. } => "NonMonotoneDerivative",
            Error::InvalidIntervalMap(_) => "InvalidIntervalMap",
            Error::OverflowGuard(_) => "OverflowGuard",
            Error::SingularProduct => "SingularProduct",
            Error::NonIrreducibleMeasure => "NonIrreducibleMeasure",
            Error::DepthOverflow { .. } => "DepthOverflow",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
