use std::path::PathBuf;

use thiserror::Error;

/// Failures of a pipeline invocation, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] iotids_core::Error),
    #[error("every model failed; first error: {0}")]
    AllModelsFailed(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::AllModelsFailed(_) => 4,
            CliError::Output { .. } => 1,
        }
    }

    pub(crate) fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
