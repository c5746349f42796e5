use rotor_core::RotorError;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Validation(_) => "validation",
            CliError::Io(_) => "io",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

/// Machine-readable failure description, printed to stderr as JSON.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: u8,
}

impl From<RotorError> for CliError {
    fn from(e: RotorError) -> Self {
        match e {
            // these come straight from user-supplied numbers
            RotorError::InvalidParameter(_)
            | RotorError::ZeroZeeman
            | RotorError::Unreachable { .. }
            | RotorError::Schedule(_)
            | RotorError::BasisTooLarge { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
