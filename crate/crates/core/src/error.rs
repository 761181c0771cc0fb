//! Error type shared across the library.

use thiserror::Error;

/// Errors raised by model construction, pricing and inference routines.
#[derive(Debug, Error)]
pub enum TcbmError {
    /// A precondition on an argument was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical check failed (mis-sized grid, indefinite Hessian, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A requested value lies outside the attainable range.
    #[error("{what} = {value} outside attainable range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// An iterative solver failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Input data failed validation.
    #[error("invalid data: {0}")]
    InvalidData(String),
}

impl TcbmError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        TcbmError::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        TcbmError::Numerical(msg.into())
    }
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, TcbmError>;
