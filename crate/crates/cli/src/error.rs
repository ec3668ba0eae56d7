use std::path::PathBuf;

use gauss_codazzi::Error;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Numerical,
    MissingInput,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::MissingInput => 4,
            ErrorKind::Io => 1,
        }
    }
}

/// Printed to stderr as a single JSON object.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub exit_code: i32,
    pub message: String,
    /// Checkpoint of the last admissible state after a solver abort.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, exit_code: kind.exit_code(), message: message.into(), snapshot: None }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::MissingInput, message)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error report serialises")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::InvalidInput(_) | Error::Domain(_) => ErrorKind::Config,
            Error::Io(_) => ErrorKind::Io,
            Error::Format { .. } => ErrorKind::MissingInput,
            _ => ErrorKind::Numerical,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(ErrorKind::Io, e.to_string())
    }
}
