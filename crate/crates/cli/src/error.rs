use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid grid file: {source}")]
    Grid {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(#[from] qfeedback::Error),

    #[error("numerical failure: {0}")]
    Check(String),

    #[error("crosscheck failed: {0} of {1} comparisons outside tolerance")]
    CrosscheckFailed(usize, usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Grid { .. } => 1,
            CliError::Numerical(_) | CliError::Check(_) => 2,
            CliError::CrosscheckFailed(..) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
