use std::process::ExitCode;

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        })
    }

    pub fn io(path: &str, err: std::io::Error) -> Self {
        CliError::Data(format!("{path}: {err}"))
    }
}

impl From<profile_sketch::Error> for CliError {
    fn from(err: profile_sketch::Error) -> Self {
        use profile_sketch::Error as E;
        match err {
            E::InvalidConfig(_) | E::ThresholdOutOfRange { .. } => CliError::Usage(err.to_string()),
            E::InvalidStreamSpec(_) => CliError::Data(err.to_string()),
            E::HashDomain { .. } | E::OccupancyOverflow { .. } | E::PartitionIndex(_) => {
                CliError::Internal(err.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
