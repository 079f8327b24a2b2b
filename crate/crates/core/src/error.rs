use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("illegal action {action} in configuration")]
    IllegalAction { action: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite gradient in tensor {0}")]
    NonFinite(String),

    #[error("alignment error in recording {recording}: {message}")]
    Alignment { recording: String, message: String },

    #[error(
        "not enough replacement names for recording {recording}: {slots} slots, {names} names"
    )]
    NameInventory {
        recording: String,
        slots: usize,
        names: usize,
    },

    #[error("search bound exceeded: {remaining} remaining tokens (max {max})")]
    SearchBound { remaining: usize, max: usize },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
