use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("numerical halt: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 4,
        }
    }

    pub fn at(path: &str, msg: impl std::fmt::Display) -> Self {
        Self::Config(format!("{path}: {msg}"))
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

impl From<sce_core::SceError> for CliError {
    fn from(e: sce_core::SceError) -> Self {
        use sce_core::SceError::*;
        match e {
            InvalidArgument(_) | Domain(_) | InsufficientJetOrder { .. } | IndexOutOfRange { .. } => {
                Self::Config(e.to_string())
            }
            _ => Self::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
