use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] vrpvqe::Error),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Io(String),

    #[error("{failed} invariant check(s) failed")]
    Validation { failed: usize },
}

impl CliError {
    /// 0 ok, 1 validation failure, 2 configuration, 3 dimension guard,
    /// 4 backend incompatibility.
    pub fn exit_code(&self) -> u8 {
        use vrpvqe::Error as E;
        match self {
            CliError::Validation { .. } => 1,
            CliError::Parse { .. } | CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                E::GuardExceeded { .. } => 3,
                E::IncompatibleBackend(_) => 4,
                E::NonFinite { .. }
                | E::Completeness { .. }
                | E::InvalidState(_)
                | E::InvalidCircuit(_)
                | E::InvalidRoute(_) => 1,
                E::InvalidInstance(_)
                | E::DimensionMismatch { .. }
                | E::KappaOutOfRange(_)
                | E::ParameterCount { .. }
                | E::Config(_)
                | E::Empty(_)
                | E::Io(_) => 2,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
