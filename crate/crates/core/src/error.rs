use std::path::PathBuf;

use thiserror::Error;

use crate::graph::UserId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({follower}, {followee}) references a user outside [0, {user_count})")]
    EdgeOutOfRange {
        follower: UserId,
        followee: UserId,
        user_count: usize,
    },

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("unknown post {0}")]
    UnknownPost(u32),

    #[error("hop count must be at least 1")]
    ZeroHop,

    #[error("no candidates to sample from")]
    EmptyNeighborhood,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("loss became NaN at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },

    #[error("exact enumeration supports at most {max} edges, got {got}")]
    TooManyEdges { got: usize, max: usize },

    #[error("ground-truth positive and negative sets overlap on user {0}")]
    OverlappingGroundTruth(UserId),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {malformed} of {total} lines malformed (first at lines {first_lines:?})")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        first_lines: Vec<usize>,
    },

    #[error("preprocessing produced an empty result at filter `{0}`")]
    EmptyAfterFilter(&'static str),

    #[error("missing context for prompt strategy {0}")]
    MissingContext(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Llm(#[from] crate::llm::LlmError),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
