use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map onto the CLI exit codes: `Validation` and `Io` are
/// reported with exit code 1, `Guard` with exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("guard violation: {what} needs {needed}, limit is {limit}")]
    Guard {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("grid resolution failure: {0}")]
    GridResolution(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
