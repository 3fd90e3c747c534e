use thiserror::Error;

/// Process exit status for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    TargetMiss = 1,
    InputError = 2,
    NumericalFailure = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed files, flags or problem data.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(odlqr::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Input(_) | CliError::Io { .. } => ExitStatus::InputError,
            CliError::Numerical(_) => ExitStatus::NumericalFailure,
        }
    }
}

impl From<odlqr::Error> for CliError {
    fn from(e: odlqr::Error) -> Self {
        use odlqr::Error as E;
        match e {
            E::DimensionMismatch { .. } | E::NotSquare { .. } | E::InvalidArgument(_) => {
                CliError::Input(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
