use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("cholesky factorization failed (n = {size}, jitter reached {jitter:e}, min pivot {min_pivot:e})")]
    Factorization {
        size: usize,
        jitter: f64,
        min_pivot: f64,
    },

    #[error("unknown case `{0}` (valid: case1, case2, case3, case4)")]
    UnknownCase(String),
}

pub type Result<T> = std::result::Result<T, Error>;
