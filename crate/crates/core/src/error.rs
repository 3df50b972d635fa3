use thiserror::Error;

/// Errors produced by data validation, fitting and transform operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition: bad shape, non-finite entries,
    /// degenerate target, invalid configuration.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix and vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The data carries no usable variation (all-zero matrix, all-zero
    /// score vector).
    #[error("no signal: {0}")]
    NoSignal(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("failed to converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
