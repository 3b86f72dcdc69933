use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the restoration pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("index ({row}, {col}) out of range for a {n}x{n} grid")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("line search failed at inner iteration {iteration}: {reason}")]
    LineSearch { iteration: usize, reason: String },

    #[error("malformed {format} file: {reason}")]
    Format { format: &'static str, reason: String },

    #[error("basis cache mismatch: {0}")]
    CacheMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad configuration rather than a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Config(_) | Error::DimensionMismatch { .. }
        )
    }
}
