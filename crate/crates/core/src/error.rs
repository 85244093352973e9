use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by instance construction and solution checking.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid field `{path}`: {reason}")]
    Invalid { path: String, reason: String },
    #[error("unknown customer id {0}")]
    UnknownCustomer(u32),
}

impl ModelError {
    pub fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::Invalid { path: path.into(), reason: reason.into() }
    }
}

/// Parse and schema errors for every file format read by the crate.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("layer sizes {found:?} do not match the expected {expected:?}")]
    Shape { expected: Vec<usize>, found: Vec<usize> },
}

impl FormatError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse { line, message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FormatError::Io { path: path.into(), source }
    }
}

/// Violations of an operation's preconditions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractError {
    #[error("vehicle {vehicle} cannot feasibly serve customer {customer}")]
    InfeasiblePair { vehicle: usize, customer: usize },
    #[error("expected input of length {expected}, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("stage {stage} exceeds trip length {trip_len}")]
    StageOutOfRange { stage: usize, trip_len: usize },
    #[error("{0}")]
    Other(String),
}
