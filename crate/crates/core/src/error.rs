use thiserror::Error;

/// Errors raised by grid construction, kernel validation and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: operands live on different frequency grids")]
    GridMismatch,

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("non-member signal: {0}")]
    NonMember(String),
}

pub type Result<T> = std::result::Result<T, Error>;
