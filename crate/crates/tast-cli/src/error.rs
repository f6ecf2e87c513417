use thiserror::Error;

/// Failures of the command-line harness, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("plot error: {0}")]
    Plot(String),

    #[error(transparent)]
    Library(#[from] tast::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Certification(_) | CliError::Refused(_) => 3,
            CliError::Library(tast::Error::Refused { .. }) => 3,
            CliError::Library(_) => 2,
            CliError::Io(_) | CliError::Csv(_) | CliError::Plot(_) => 1,
        }
    }
}
