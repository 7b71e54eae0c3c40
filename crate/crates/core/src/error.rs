use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("no data rows")]
    NoDataRows,

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    ParseFeature {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}, column {column}: cannot parse label {value:?} as an integer")]
    ParseLabel {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}, column {column}: non-finite feature value")]
    NonFinite { row: usize, column: usize },

    #[error("label column {0} not found")]
    LabelColumn(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid label {label} at row {row}: {reason}")]
    InvalidLabel {
        row: usize,
        label: i64,
        reason: &'static str,
    },

    #[error("class {0} has no members")]
    EmptyClass(i64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate bandwidth: median pairwise distance is zero")]
    DegenerateBandwidth,

    #[error("optimizer diverged at iteration {iteration}: non-finite {term}")]
    Diverged {
        iteration: usize,
        term: &'static str,
    },

    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
