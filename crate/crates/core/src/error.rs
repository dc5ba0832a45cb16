use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unschedulable kernel: {0}")]
    Unschedulable(String),

    #[error("invalid workload template: {0}")]
    Template(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("unsupported kernel file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("invalid bucket spec: {0}")]
    Bucket(String),

    #[error("unknown policy `{given}`; valid policies: {valid}")]
    UnknownPolicy { given: String, valid: String },

    #[error("simulation fault: {0}")]
    SimFault(String),

    #[error("learning fault: {0}")]
    LearningFault(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SimFault(_) | Error::LearningFault(_) => 3,
            _ => 2,
        }
    }
}
