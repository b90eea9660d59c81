use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation or malformed configuration.
    #[error("{0}")]
    Usage(String),

    /// Well-formed but physically meaningless input caught before the core runs.
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error(transparent)]
    Physics(#[from] qarray::Error),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Param(_) | Self::Io(_) => 2,
            Self::Physics(qarray::Error::RegimeViolated(_)) => 3,
            Self::Physics(_) => 2,
            Self::Validation(_) => 3,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}
