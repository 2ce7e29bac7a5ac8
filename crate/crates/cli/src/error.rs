use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("precision refusal: {0}")]
    Precision(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Precision(_) => 4,
        }
    }
}

impl From<mpsplit::Error> for CliError {
    fn from(e: mpsplit::Error) -> Self {
        use mpsplit::Error as E;
        match e {
            E::InvalidSequence(_)
            | E::Infeasible { .. }
            | E::LengthMismatch { .. }
            | E::InvalidParameter(_)
            | E::DegenerateOrbit => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
