use thiserror::Error;

/// Errors raised by the conditional analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RcaError {
    #[error("invalid probability space: {0}")]
    InvalidSpace(String),

    #[error("invalid sigma-algebra: {0}")]
    InvalidAlgebra(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value {value} at atom {atom}")]
    NonFinite { atom: usize, value: f64 },

    #[error("not measurable with respect to the conditioning algebra (atom {atom})")]
    NotMeasurable { atom: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible density: {0}")]
    Infeasible(String),

    #[error("enumeration budget exceeded: {needed} elements > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, RcaError>;
