//! Library side of the `ispca` command-line tool: CSV loading, model files,
//! SVG plotting and the subcommand implementations. The binary in `main.rs`
//! is a thin clap wrapper over [`commands`].

pub mod commands;
pub mod io;
pub mod modelfile;
pub mod svg;

use std::fmt;

/// Tool-level errors carrying the process exit code: 1 for usage problems,
/// 2 for data problems, 3 for numeric failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ispca_core::Error> for CliError {
    fn from(e: ispca_core::Error) -> Self {
        match e {
            ispca_core::Error::InvalidInput(m) => CliError::Data(m),
            ispca_core::Error::DimensionMismatch(m) => CliError::Data(m),
            ispca_core::Error::NoSignal(m) => CliError::Numeric(m),
            ispca_core::Error::NonConvergence(m) => CliError::Numeric(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
