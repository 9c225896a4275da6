use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the calibration library.
///
/// The variants fall into a small number of categories (see [`ErrorKind`])
/// so that front ends can map them onto stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violated a precondition (shape, finiteness, range).
    #[error("rejected input: {0}")]
    InvalidInput(String),

    /// A dense factorization failed even after the jitter retry.
    #[error("numerical failure: {reason} (attempted jitter {jitter:e})")]
    NumericalFailure { reason: String, jitter: f64 },

    /// R² is undefined for constant ground truth.
    #[error("degenerate denominator: ground truth is constant")]
    DegenerateDenominator,

    /// The least-squares design matrix is rank deficient.
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    /// A CSV file is missing a required column or has a malformed header.
    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    /// A cell could not be parsed or violated a record invariant.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// A serialized model file had the wrong header or a malformed body.
    #[error("model format error: {0}")]
    Format(String),

    /// Invalid configuration (optimizer, generator, split, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification of [`Error`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
    Schema,
    Config,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_) => ErrorKind::Input,
            Error::NumericalFailure { .. }
            | Error::DegenerateDenominator
            | Error::DegenerateDesign(_) => ErrorKind::Numerical,
            Error::Schema { .. } | Error::Parse { .. } | Error::Format(_) => ErrorKind::Schema,
            Error::Config(_) => ErrorKind::Config,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
