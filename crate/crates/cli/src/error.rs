use delta_eita::Error as CoreError;
use thiserror::Error;

/// Failure of a CLI run; each class maps to a distinct process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical error: {0}")]
    Numerical(CoreError),

    #[error("resolution error: {0}")]
    Resolution(CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Resolution(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e.root() {
            CoreError::InvalidParameter(_) | CoreError::NoSignChange { .. } => CliError::Validation(e.to_string()),
            CoreError::InsufficientResolution(_) | CoreError::WindowTooNarrow(_) | CoreError::BasisTooSmall { .. } => {
                CliError::Resolution(e)
            }
            _ => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
