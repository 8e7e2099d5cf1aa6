use std::path::PathBuf;

/// Failure classes surfaced by the CLI; each maps to a distinct exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Core(#[from] rabisim_core::Error),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("signal processing failed: {0}")]
    Signal(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Core(rabisim_core::Error::IntegrationFailure { .. }) => 3,
            Self::Core(rabisim_core::Error::InvalidParameters(_)) => 2,
            Self::Fit(_) | Self::Signal(_) => 4,
            Self::Io { .. } => 5,
            _ => 1,
        }
    }
}

pub type Result<T, E = RunError> = std::result::Result<T, E>;
