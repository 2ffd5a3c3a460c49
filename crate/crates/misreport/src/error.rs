//! Crate-wide error and result types.

use thiserror::Error;

/// Errors produced by estimation, bound computation, and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or configuration supplied by the caller.
    #[error("validation: {0}")]
    Validation(String),

    /// Input data is malformed or insufficient for the requested operation.
    #[error("data: {0}")]
    Data(String),

    /// A numerical routine failed or exceeded its budget.
    #[error("computation: {0}")]
    Computation(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn computation(msg: impl Into<String>) -> Self {
        Error::Computation(msg.into())
    }
}
