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

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate key {key}")]
    DuplicateKey { key: String },

    #[error("cannot build an index from an empty collection")]
    EmptyCollection,

    #[error("unsupported index format: {0}")]
    UnsupportedVersion(String),

    #[error("corrupt index: {0}")]
    Corrupt(String),

    /// A documented precondition of an operation was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("transport error: {message}")]
    Transport { message: String, raw: String },

    #[error("protocol error: {message}")]
    Protocol { message: String, raw: String },

    /// The remote side answered with an explicit error message.
    #[error("remote error: {0}")]
    Remote(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("query {query_id}: {source}")]
    Query {
        query_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep failed at n={n}: {source}")]
    Sweep {
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn transport(message: impl Into<String>, raw: impl Into<String>) -> Self {
        Error::Transport {
            message: message.into(),
            raw: raw.into(),
        }
    }

    pub(crate) fn protocol(message: impl Into<String>, raw: impl Into<String>) -> Self {
        Error::Protocol {
            message: message.into(),
            raw: raw.into(),
        }
    }

    /// The innermost error, unwrapping query and sweep context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Query { source, .. } | Error::Sweep { source, .. } => source.root(),
            other => other,
        }
    }
}
