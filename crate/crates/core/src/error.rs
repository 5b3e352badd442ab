use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("source unavailable: {path}: {reason}")]
    SourceUnavailable { path: PathBuf, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("clock skew: now ({now}) is earlier than built_at ({built_at})")]
    ClockSkew { now: String, built_at: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("XML parse error at line {line}, column {col}: {message}")]
    XmlParse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("unsupported schema version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("corrupt repository: pattern rank {rank}: {reason}")]
    CorruptRepository { rank: usize, reason: String },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("empty query")]
    EmptyQuery,

    #[error("exemplar index {index} out of range ({available} available)")]
    Range { index: usize, available: usize },

    #[error("unknown transaction {0:?}")]
    UnknownTransaction(String),

    #[error("record line {line}: {message}")]
    Ingest { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
