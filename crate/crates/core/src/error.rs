//! Error type shared by all analysis operations.

use thiserror::Error;

/// Unified result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input row or header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// The measurement grid has a gap.
    #[error("missing index ({indices}) for {benchmark}")]
    MissingCell { benchmark: String, indices: String },

    /// The same (benchmark, index tuple) appears more than once.
    #[error("duplicate index ({indices}) for {benchmark}")]
    DuplicateCell { benchmark: String, indices: String },

    /// A domain invariant was violated.
    #[error("{0}")]
    Validation(String),

    /// Lookup of a benchmark that is not in the dataset.
    #[error("unknown benchmark: {0}")]
    UnknownBenchmark(String),

    /// Too few values for the requested statistic.
    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the error stems from the environment (missing or unreadable
    /// files) rather than from invalid content.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            _ => false,
        }
    }

    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }
}

/// Renders a 1-based index tuple the way grid errors report it, e.g. `2,3`.
pub(crate) fn format_indices(indices: &[usize]) -> String {
    indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
