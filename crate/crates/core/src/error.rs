use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("regime error: {0}")]
    Regime(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("{what} has {count} elements, above the cap of {cap}")]
    Size { what: String, count: String, cap: u64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("coefficient {0} cannot be resolved in this channel realization")]
    Unresolvable(String),

    #[error("infeasible construction: {0}")]
    Feasibility(String),
}

pub type Result<T> = std::result::Result<T, Error>;
