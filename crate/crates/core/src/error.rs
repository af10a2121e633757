use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bit character {found:?} at position {position}")]
    InvalidBitChar { position: usize, found: char },

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid sync parameters: {0}")]
    InvalidParams(String),

    #[error("invalid frame spec: {0}")]
    InvalidFrameSpec(String),

    #[error("invalid channel spec: {0}")]
    InvalidChannel(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("malformed packed bit file: {0}")]
    MalformedPacked(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
