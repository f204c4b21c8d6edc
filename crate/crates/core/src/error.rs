use thiserror::Error;

/// Errors surfaced by the simulation and optimization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration invariant does not hold.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Inputs of mismatched dimensions were combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The interior-point backend failed to converge or broke down numerically.
    /// Distinct from a certified infeasibility verdict.
    #[error("solver failure: {0}")]
    Solver(String),

    /// The transmit subproblem is infeasible even at the lower bisection bound.
    #[error("transmit beamforming infeasible at tau_min = {tau_min}")]
    Infeasible { tau_min: f64 },

    /// The candidate codebook is larger than the enumeration budget.
    #[error("codebook cardinality {cardinality} exceeds enumeration budget {budget}")]
    BudgetExceeded { cardinality: u128, budget: u64 },

    /// Malformed key-value text.
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
