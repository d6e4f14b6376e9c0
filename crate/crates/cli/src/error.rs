use std::path::PathBuf;

use thiserror::Error;

/// Stable process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Io = 2,
    AllSolversFailed = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] lsqbench_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("every requested solver failed")]
    AllSolversFailed,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::Usage,
            CliError::Core(e) if e.is_io() => ExitCode::Io,
            CliError::Core(_) => ExitCode::Usage,
            CliError::Io { .. } => ExitCode::Io,
            CliError::AllSolversFailed => ExitCode::AllSolversFailed,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
