// SPDX-License-Identifier: MIT OR Apache-2.0

//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two operands disagree on shape.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input carried NaN or infinity.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A scalar argument was outside its allowed range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The run configuration is inconsistent.
    #[error("invalid config: {0}")]
    Config(String),

    /// A token id or context length does not fit the model.
    #[error("invalid input tokens: {0}")]
    Tokens(String),

    /// Training diverged (non-finite loss).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// File system failure, with the offending path.
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record or spec file could not be parsed.
    #[error("malformed data in {path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
