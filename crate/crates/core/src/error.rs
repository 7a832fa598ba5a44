use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("csv file has no header row")]
    MissingHeader,

    #[error("duplicate column name {0:?} in header")]
    DuplicateHeader(String),

    #[error("label column {0:?} not found in header")]
    UnknownLabelColumn(String),

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },

    #[error("line {line}, column {column:?}: cannot parse {value:?} as a finite number")]
    ParseCell { line: u64, column: String, value: String },

    #[error("line {line}: label {value:?} is not 0 or 1")]
    InvalidLabel { line: u64, value: String },

    #[error("table has no rows")]
    EmptyTable,

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("only one class present: {0}")]
    SingleClass(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("value {value} at index {index} is not a binary class id")]
    NonBinary { index: usize, value: u8 },

    #[error("impurity of an empty node is undefined")]
    EmptyNode,

    #[error("cannot build {folds} folds from {rows} rows")]
    TooFewRows { rows: usize, folds: usize },

    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),

    #[error("every grid combination failed; first error: {0}")]
    GridFailed(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
