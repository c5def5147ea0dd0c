use thiserror::Error;

/// Errors raised by the reconstruction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DsmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("numerical failure: {what} (residual {residual:e} after {iterations} sweeps)")]
    NumericalFailure {
        what: String,
        residual: f64,
        iterations: usize,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("malformed far-field file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, DsmError>;

pub(crate) fn invalid(msg: impl Into<String>) -> DsmError {
    DsmError::InvalidArgument(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> DsmError {
    DsmError::DegenerateInput(msg.into())
}
