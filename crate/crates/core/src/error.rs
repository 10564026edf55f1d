use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("collapse suspected: {0}")]
    Collapse(String),

    #[error("dimension cap exceeded: {0}")]
    CapExceeded(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("self-check failed: {0}")]
    SelfCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
