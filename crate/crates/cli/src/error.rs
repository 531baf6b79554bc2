use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<vvrkbs::Error> for CliError {
    fn from(e: vvrkbs::Error) -> Self {
        match e {
            vvrkbs::Error::Solver(_) => CliError::NonConvergence(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
