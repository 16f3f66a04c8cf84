use thiserror::Error;

/// Errors produced by the dsbm-core operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("node {node} has non-positive degree {degree}")]
    ZeroDegree { node: usize, degree: f64 },

    #[error("window of {window} snapshots exceeds available history of {available}")]
    WindowExceedsHistory { window: usize, available: usize },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("eigensolver did not converge: residual {residual:.3e} with basis size {basis}")]
    NonConvergence { residual: f64, basis: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
