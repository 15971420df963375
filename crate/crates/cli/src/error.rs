//! CLI error type carrying the exit codes the tool promises to scripts.

use renewal_core::Error as CoreError;

/// Exit codes: 1 I/O or unexpected failure, 2 parse/configuration error,
/// 3 training divergence, 4 empty dataset, 5 checkpoint/config shape
/// mismatch.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Diverged(String),
    #[error("{0}")]
    Empty(String),
    #[error("{0}")]
    Shape(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Empty(_) => 4,
            CliError::Shape(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match &err {
            CoreError::Diverged { .. } => CliError::Diverged(err.to_string()),
            CoreError::Empty(_) => CliError::Empty(err.to_string()),
            CoreError::ShapeMismatch(_) => CliError::Shape(err.to_string()),
            CoreError::InvalidParameter(_) | CoreError::InvalidData(_) | CoreError::Checkpoint(_) => {
                CliError::Parse(err.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        if matches!(err.kind(), csv::ErrorKind::Io(_)) {
            return CliError::Io(err.to_string());
        }
        match err.position().map(|p| p.line()) {
            Some(line) => CliError::Parse(format!("line {line}: {err}")),
            None => CliError::Parse(err.to_string()),
        }
    }
}
