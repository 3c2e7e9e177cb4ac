use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("missing input {path} (run `dqrom {producer}` first)")]
    MissingInput { path: PathBuf, producer: &'static str },
    #[error(transparent)]
    Core(#[from] dqrom_core::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        LabError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// 1 for usage and input problems, 2 for numerical failures, 3 when a
    /// verification suite fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(dqrom_core::Error::InvalidConfig(_)) => 1,
            LabError::Core(_) => 2,
            LabError::Verification(_) => 3,
            _ => 1,
        }
    }
}
