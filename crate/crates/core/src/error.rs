use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The logarithmic kernel was evaluated at or beyond its normalization radius.
    #[error("kernel normalization error: r = {r} is not below n0 = {n0}; enlarge n0")]
    Normalization { r: f64, n0: f64 },

    /// Points or measures live in incompatible ambient spaces.
    #[error("type error: {0}")]
    Mismatch(String),

    /// Quadrature, solver or accumulation failure.
    #[error("numeric error: {message}")]
    Numeric { message: String },

    /// An internal identity failed to hold to tolerance.
    #[error("consistency error: {what} residual {residual:e} exceeds {tolerance:e}")]
    Consistency {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    /// The request is valid but cannot be answered faithfully with the given resolution.
    #[error("refused: {reason}; suggestion: {suggestion}")]
    Refused { reason: String, suggestion: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("length error: expected {expected} bytes, found {found}")]
    Length { expected: u64, found: u64 },

    #[error("unsupported version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },

    /// Manifest validation failure, pointing at the offending line.
    #[error("{}:{line}: invalid `{field}`: {message}", file.display())]
    Validation {
        file: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn numeric(message: impl Into<String>) -> Self {
        Error::Numeric {
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub(crate) fn refused(reason: impl Into<String>, suggestion: impl Into<String>) -> Self {
        Error::Refused {
            reason: reason.into(),
            suggestion: suggestion.into(),
        }
    }
}
