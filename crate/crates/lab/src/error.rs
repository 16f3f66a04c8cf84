use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] dsbm_core::Error),
}

impl LabError {
    /// 1 usage or invalid input, 2 failed verification, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) | LabError::Config { .. } => 1,
            LabError::Verification(_) => 2,
            LabError::Io(_) | LabError::Core(dsbm_core::Error::Io(_)) => 3,
            LabError::Core(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
