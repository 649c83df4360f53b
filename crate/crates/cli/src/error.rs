//! CLI-level errors carrying the process exit code.

use thiserror::Error;

/// Exit codes: 0 success, 1 I/O trouble, 2 bad configuration, 3 numerical
/// failure during a run.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Classifies a core error found while validating inputs.
pub fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Classifies a core error raised mid-run.
pub fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

pub type CliResult<T> = std::result::Result<T, CliError>;
