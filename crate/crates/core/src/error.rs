use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "{op}: dimension mismatch between {left_rows}x{left_cols} and {right_rows}x{right_cols}"
    )]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("{op}: expected length {expected}, got {actual}")]
    LengthMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("{op}: {rows} rows are not enough for {cols} unknowns")]
    InsufficientRows {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("singular pivot at column {column}")]
    SingularPivot { column: usize },

    #[error("pivot element too small for stable solution at row {row}")]
    PivotTooSmall { row: usize },

    #[error("rank-deficient design: column {column} is linearly dependent on earlier columns")]
    RankDeficient { column: usize },

    #[error("{op}: solution contains non-finite values")]
    NonFiniteSolution { op: &'static str },

    #[error("{0}: empty input")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("group ({town}, {year}) has no buy label")]
    Unlabeled { town: String, year: i32 },

    #[error("r2 score undefined: target has zero variance")]
    ZeroVariance,

    #[error("{path}: missing required column {column:?}")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("no usable data: {0}")]
    NoUsableData(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by the filesystem rather than by the content of
    /// the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
