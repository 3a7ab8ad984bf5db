use thiserror::Error;

/// Errors raised by the noise-reversal library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("brute force refused: {count} compositions exceed the cap of {cap}")]
    TooManyCompositions { count: u128, cap: u128 },

    #[error("infeasible assignment: {0}")]
    Infeasible(String),

    #[error("all {0} restarts aborted on non-finite energy")]
    AllRestartsAborted(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
