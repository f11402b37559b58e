//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by dataset ingestion, model training, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("column not found: {0:?}")]
    MissingColumn(String),

    #[error("duplicate column: {0:?}")]
    DuplicateColumn(String),

    #[error("non-numeric value {value:?} in column {column:?} at data row {row}")]
    NonNumericCell {
        column: String,
        value: String,
        row: usize,
    },

    #[error("non-binary label {value:?} at data row {row}")]
    NonBinaryLabel { value: String, row: usize },

    #[error("non-finite value in column {column:?} at data row {row}")]
    NonFiniteCell { column: String, row: usize },

    #[error("length mismatch: {left} vs {right} ({what})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("class {class} has {count} members but at least {required} are required")]
    ClassTooSmall {
        class: u8,
        count: usize,
        required: usize,
    },

    #[error("timestamps required but not present in the dataset")]
    MissingTimestamps,

    #[error("degenerate time range: all timestamps are equal")]
    DegenerateTimeRange,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("k-means failed to initialize: requested {requested} centroids but only {distinct} distinct points")]
    KMeansInit { requested: usize, distinct: usize },

    #[error("model deserialization failed: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
