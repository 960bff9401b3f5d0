//! Error type shared across the library.

use std::path::PathBuf;

use thiserror::Error;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed record in an input file, located by line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// A feature CSV header column that does not belong to the schema.
    #[error("unexpected column {column:?} in feature-table header")]
    Schema { column: String },

    /// An intent score outside [0, 1] in a feature-table row.
    #[error("row {row}: intent score {value} outside [0, 1]")]
    ScoreRange { row: usize, value: f64 },

    /// MicrosoftURL=y implies ContainsURL=y; the row violates that.
    #[error("row {row}: MicrosoftURL=y requires ContainsURL=y")]
    UrlFlag { row: usize },

    /// An intent score outside [0, 1] handed to a fitted model.
    #[error("intent score {value} outside [0, 1]")]
    ScoreOutOfRange { value: f64 },

    /// Feature extraction was asked to run on a discarded tweet.
    #[error("tweet filtered")]
    Filtered,

    /// Training data must contain at least one row of each class.
    #[error("training data needs both classes")]
    NeedBothClasses,

    /// A training or stratification row without a gold label.
    #[error("row {row} has no label")]
    Unlabeled { row: usize },

    /// A sample request larger than the unfetched pool.
    #[error("sample of {requested} requested but only {remaining} tweets remain unfetched")]
    SampleExhausted { requested: usize, remaining: usize },

    /// A cross-validation fold count outside 2..=n.
    #[error("fold count {k} invalid for {n} rows (need 2 <= k <= n)")]
    FoldCount { k: usize, n: usize },

    #[error("config: {0}")]
    Config(String),

    /// A model file that is unreadable or fails validation.
    #[error("model file {path}: {msg}")]
    Model { path: PathBuf, msg: String },
}

impl Error {
    /// Wrap an I/O failure with the path it touched.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
