use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },

    #[error("truncated payload: {what} needs {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        what: &'static str,
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("{count} trailing bytes after payload")]
    TrailingBytes { count: usize },

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("record {record}: class id {class} out of range for {num_classes} classes")]
    ClassOutOfRange {
        record: usize,
        class: i64,
        num_classes: usize,
    },

    #[error("record {record}: component {component} is not finite")]
    NonFinite { record: usize, component: usize },

    #[error("record {record}: zero-norm feature vector")]
    ZeroVector { record: usize },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column}: cannot parse {text:?}")]
    BadNumber {
        line: usize,
        column: usize,
        text: String,
    },

    #[error("class {class} has no records (class ids must be dense)")]
    MissingClass { class: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or inconsistent input data, as
    /// opposed to I/O or runtime failures.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::ThreadPool(_))
    }
}
