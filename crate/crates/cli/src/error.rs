//! Failures of a command and the exit codes they map to.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unknown scenario or instance, unreadable input.
    #[error("{0}")]
    Usage(String),
    /// A plan failed validation.
    #[error("validation failed: {0}")]
    Invalid(String),
    /// The solver failed or returned no solution.
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 64,
            Self::Invalid(_) => 1,
            Self::Solver(_) | Self::Io(_) => 2,
        }
    }
}
