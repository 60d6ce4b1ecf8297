//! Error type shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of calibration, fitting, and file handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file could not be read or written.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of an input file did not match the expected format.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Arguments or data violate a precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// The annotation budget was exceeded or misused.
    #[error("annotation budget error: {0}")]
    Budget(String),

    /// Training labels are all one class, so no classifier can be fit.
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// A matrix factorization failed even after jitter escalation.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Training set exceeds the supported exact-inference size.
    #[error("too many training points: {got} exceeds the cap of {cap}")]
    TooManyPoints { got: usize, cap: usize },
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

    pub(crate) fn input(message: impl Into<String>) -> Self {
        Error::Input(message.into())
    }
}
