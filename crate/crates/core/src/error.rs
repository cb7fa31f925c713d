use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::compile::CompileStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sentence")]
    EmptySentence,

    #[error("invalid n-gram order {0}: must be at least 2")]
    InvalidOrder(usize),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("context has {got} tokens, expected {expected}")]
    Arity { expected: usize, got: usize },

    #[error("model error: {0}")]
    Model(String),

    #[error("unknown variant `{0}` (expected core, german, spanish or portuguese)")]
    UnknownVariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("state limit of {limit} exceeded at layer {layer} ({states} states)")]
    StateLimit {
        limit: usize,
        layer: usize,
        states: usize,
        partial: Box<CompileStats>,
    },

    #[error("empty n-gram record set")]
    EmptyRecords,

    #[error("scorer error: {0}")]
    Scorer(String),

    #[error("{path}: {source}")]
    FileIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StateLimit { .. } => 4,
            Error::FileIo { .. } | Error::Io(_) | Error::Scorer(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::FileIo {
            path: path.into(),
            source,
        }
    }
}
