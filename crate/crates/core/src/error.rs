//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-norm {off:.3e})")]
    EighNoConvergence { sweeps: usize, off: f64 },

    #[error("matrix is singular: {what}")]
    Singular { what: String },

    #[error("invalid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("parameter `{param}` out of domain: {reason}")]
    Domain { param: String, reason: String },

    #[error("POVM is incomplete: deviation from identity {gap:.3e}")]
    IncompletePovm { gap: f64 },

    #[error("invalid POVM: {reason}")]
    InvalidPovm { reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("parse error in {what}: {reason}")]
    Parse { what: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(param: &str, reason: impl Into<String>) -> Self {
        Error::Domain {
            param: param.to_string(),
            reason: reason.into(),
        }
    }

    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
