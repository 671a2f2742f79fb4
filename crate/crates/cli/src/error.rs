use std::path::PathBuf;

use thiserror::Error;

/// Failure of one subcommand; [`CliError::exit_code`] maps it onto the
/// process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files.
    #[error("{0}")]
    Input(String),
    /// The input was readable but empty where that is fatal.
    #[error("{0}")]
    Empty(String),
    #[error("{0}")]
    BudgetExhausted(String),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Empty(_) => 3,
            CliError::BudgetExhausted(_) => 4,
            CliError::Output { .. } | CliError::Runtime(_) => 1,
        }
    }

    pub fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn output(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}
