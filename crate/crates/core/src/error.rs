use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    /// A file could be read but its content is malformed.
    #[error("{path}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Load {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("chunk {chunk_id} failed: {message}")]
    ChunkFailed { chunk_id: usize, message: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn load(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Load {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

/// Process exit codes shared by the command-line tools.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const INPUT: i32 = 3;
    /// Output was written but at least one chunk failed.
    pub const PARTIAL: i32 = 4;
}

impl Error {
    /// Exit code for a run that stopped with this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => exit::USAGE,
            Error::ChunkFailed { .. } => exit::PARTIAL,
            _ => exit::INPUT,
        }
    }
}
