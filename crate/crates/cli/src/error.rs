use std::path::Path;

use thiserror::Error;
use uavnet_core::Error as CoreError;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Failures split by who is at fault: bad input (exit 2) or a failed run (exit 3).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn read(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("cannot read {}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::InvalidConfig(_)
            | CoreError::Format(_)
            | CoreError::ShapeMismatch { .. }
            | CoreError::InconsistentOrder
            | CoreError::NoDamage => CliError::Validation(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}
