//! Command-line front end wiring the sum-rate library into reproducible
//! experiments with declarative configs and machine-readable output.

pub mod commands;
pub mod output;
pub mod spec;

use std::fmt;

/// CLI failure classes; each maps to a distinct process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files, or geometry (exit code 2).
    Config(String),
    /// A computation failed (exit code 3).
    Numerical(String),
    /// One or more validation checks failed (exit code 4).
    ValidationFailed(u32),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::ValidationFailed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::ValidationFailed(n) => write!(f, "{n} validation check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}
