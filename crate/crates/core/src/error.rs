use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The bytes on disk do not follow the expected file layout.
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    /// The data parsed, but breaks a type invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A quantity is mathematically undefined for the given input
    /// (zero vector, zero centroid, constant ranking, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("PCA with k={requested} exceeds the achievable rank {max}")]
    RankExceeded { requested: usize, max: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by how the engine was invoked rather than by the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
