//! Library half of the `aoisim` binary: config files, presets and writers.

pub mod config;
pub mod output;
pub mod presets;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// One or more self-checks failed.
    #[error("verification failed: {0}")]
    Verify(String),
}

impl From<aoisim::Error> for CliError {
    fn from(e: aoisim::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 2,
            _ => 1,
        }
    }
}
