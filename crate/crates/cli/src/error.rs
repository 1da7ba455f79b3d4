use std::path::PathBuf;

use callmoney_core::ModelError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const PARAMETER: i32 = 2;
    pub const VERIFICATION: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Model(ModelError::Usage(_)) => exit::USAGE,
            CliError::Model(_) => exit::PARAMETER,
            CliError::Verification(_) => exit::VERIFICATION,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
