use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("row {row}: expected {expected} fields, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column `{column}`: `{token}` is not a number")]
    NotNumeric {
        row: usize,
        column: String,
        token: String,
    },

    #[error("missing numeric value in column `{column}` (tid {tid}); apply a missing-value policy first")]
    MissingNumeric { column: String, tid: u64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("tid {0} is already a member of the cluster")]
    DuplicateTid(u64),

    #[error("partitions do not cover the same tids")]
    TidMismatch,

    #[error("no class label for tid(s) {0:?}")]
    MissingClass(Vec<u64>),

    #[error("no label for tid(s) {0:?}")]
    MissingLabel(Vec<u64>),

    #[error("config: {0}")]
    Config(String),

    #[error("download failed for {url}: {message}")]
    Fetch { url: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
