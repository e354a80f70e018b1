use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A factorization or inner solve failed even after jitter escalation.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Not enough samples for the requested operation.
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// The series has zero sample variance.
    #[error("degenerate series: sample variance is zero")]
    DegenerateSeries,

    /// A window threshold that would force an empty window.
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    /// Window entries are not consecutive in time or do not end at the filter time.
    #[error("window corrupt: {0}")]
    WindowCorrupt(String),

    /// Arguments violate a documented precondition (dimensions, ranges, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A malformed data file.
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    /// A time series skips a time stamp.
    #[error("{}: time stamps skip t={missing}", path.display())]
    Gap { path: PathBuf, missing: i64 },

    /// A configuration document does not match the schema.
    #[error("schema error at `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
