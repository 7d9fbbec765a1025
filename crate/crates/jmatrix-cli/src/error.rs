use std::io;
use std::path::PathBuf;

use thiserror::Error;

use jmatrix::error::{BasisError, InverseError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("solver failed at stage '{stage}': {message}")]
    Solver { stage: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) | CliError::Read { .. } => 2,
            CliError::Solver { .. } => 3,
            CliError::Write { .. } => 1,
        }
    }

    pub fn solver(stage: &str, err: impl std::fmt::Display) -> Self {
        CliError::Solver { stage: stage.into(), message: err.to_string() }
    }

    /// Parameter errors are bad input; anything else failed while building the basis.
    pub fn basis(err: BasisError) -> Self {
        match err {
            BasisError::Parameter { .. } => CliError::Usage(err.to_string()),
            other => CliError::solver("basis", other),
        }
    }
}

impl From<InverseError> for CliError {
    fn from(err: InverseError) -> Self {
        let stage = err.stage().to_string();
        let message = match err {
            InverseError::Stage { message, .. } => message,
            other => other.to_string(),
        };
        CliError::Solver { stage, message }
    }
}
