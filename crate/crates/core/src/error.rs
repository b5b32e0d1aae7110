use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-binary label {value} at index {index}")]
    NonBinaryLabel { index: usize, value: String },

    #[error("training data contains a single class ({class})")]
    SingleClass { class: u8 },

    #[error("class {class} has {count} samples, need at least {needed}")]
    ClassTooSmall { class: u8, count: usize, needed: usize },

    #[error("too few samples: {got}, need at least {needed}")]
    TooFewSamples { got: usize, needed: usize },

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("feature-space mismatch: model expects '{model}' features, input is '{input}'")]
    FeatureSpaceMismatch { model: String, input: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: schema error: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("non-finite value {value} at row {row}, column {column}")]
    NonFinite { row: usize, column: usize, value: f64 },

    #[error("{what} did not converge after {iterations} {unit}")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        unit: &'static str,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unknown model kind '{0}'")]
    UnknownKind(String),

    #[error("unsupported document version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("malformed model document: {0}")]
    Document(String),

    #[error("every grid point failed; last error: {last}")]
    AllGridPointsFailed { last: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) | Error::UnknownKind(_) => ErrorClass::Usage,
            Error::NotConverged { .. } | Error::Numeric(_) | Error::AllGridPointsFailed { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
