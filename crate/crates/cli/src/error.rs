use std::fmt::Display;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("[{stage}] {path}: {source}")]
    Io {
        stage: &'static str,
        path: String,
        source: std::io::Error,
    },
    #[error("[{stage}] {message}")]
    Invalid { stage: &'static str, message: String },
}

impl CliError {
    pub fn io(stage: &'static str, path: &Path, source: std::io::Error) -> Self {
        CliError::Io { stage, path: path.display().to_string(), source }
    }

    pub fn invalid(stage: &'static str, message: impl Display) -> Self {
        CliError::Invalid { stage, message: message.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Invalid { .. } => 1,
        }
    }
}
