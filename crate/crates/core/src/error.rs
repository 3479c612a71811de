//! Error type shared by the core domain operations.

use thiserror::Error;

/// Errors raised while constructing or loading core domain types.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A required CSV column is absent from the header row.
    #[error("missing column `{0}` in input file")]
    MissingColumn(String),

    /// A count cell did not parse as a non-negative integer.
    #[error("row {row}: `{value}` is not an integer count")]
    NonIntegerCount { row: usize, value: String },

    /// A count cell parsed as a negative number.
    #[error("row {row}: negative count `{value}`")]
    NegativeCount { row: usize, value: String },

    /// A date cell did not parse as an ISO-8601 calendar date.
    #[error("row {row}: `{value}` is not an ISO-8601 date")]
    BadDate { row: usize, value: String },

    /// Consecutive rows skip at least one calendar day.
    #[error("date gap: expected {expected}, found {found}")]
    DateGap { expected: String, found: String },

    /// The file parsed but contained no data rows.
    #[error("input file has no data rows")]
    EmptyInput,

    /// Series construction violated a length invariant.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// An argument failed a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A quantity left its mathematical domain (e.g. division by a zero norm).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
