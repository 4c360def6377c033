use thiserror::Error;

/// Command failure, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<critspec::Error> for CliError {
    fn from(e: critspec::Error) -> Self {
        use critspec::Error::*;
        match e {
            NonConvergence { .. } | Fit(_) | Range(_) => CliError::Numeric(e.to_string()),
            Domain(_) | Validation(_) | Usage(_) | Memory(_) => CliError::Config(e.to_string()),
        }
    }
}
