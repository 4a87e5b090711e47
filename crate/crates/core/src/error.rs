use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical routines and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is outside [-1, 1]")]
    Domain { value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("moment convention mismatch: expected {expected}, got {got}")]
    Convention {
        expected: &'static str,
        got: &'static str,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors that come from reading or parsing input files.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
