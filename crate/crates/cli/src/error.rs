use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, override or CSV schema.
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] cogsense::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use cogsense::Error as E;
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(E::Argument(_) | E::Domain { .. } | E::Unsupported(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
