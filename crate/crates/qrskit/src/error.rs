//! Error type shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by signal ingestion, the wavelet transform, the detector
/// and the analysis stages.
#[derive(Debug, Error)]
pub enum Error {
    /// File could not be read or written.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A row of an input file failed to parse. Line numbers are 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A parameter or input value violates a precondition.
    #[error("{0}")]
    Value(String),

    /// The detector found no beats in the signal.
    #[error("no beats found")]
    NoBeats,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn value(message: impl Into<String>) -> Self {
        Error::Value(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
