use std::path::PathBuf;

use thiserror::Error;

use crate::jsd::JsdSplit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {left:?} vs {right:?}")]
    DimensionMismatch {
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("empty matrix ({0} x {1})")]
    EmptyMatrix(usize, usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("mask entry at ({row}, {col}) is {value}, expected 0 or 1")]
    InvalidMask { row: usize, col: usize, value: f64 },

    #[error("zero-norm ground truth")]
    ZeroNormGroundTruth,

    #[error("degenerate attribute: every observed entry is zero")]
    DegenerateAttribute,

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("key/public-vector mismatch: {0}")]
    KeyMismatch(String),

    #[error("nothing observed")]
    NothingObserved,

    #[error("rank-deficient column solve at column {column}")]
    RankDeficient { column: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("joint solve needs at least 2 attributes, got {0}")]
    TooFewAttributes(usize),

    #[error("JSD solve did not converge (duality gap {gap:e})")]
    JsdNotConverged { gap: f64, best: Box<JsdSplit> },

    #[error("JSD failed at column {column}: {cause}")]
    JsdColumn { column: usize, cause: Box<Error> },

    #[error("wrong schema? {malformed} of {total} lines malformed")]
    WrongSchema { malformed: usize, total: usize },

    #[error("ground truth too small: achieved {achieved:?}, requested at least {requested:?}")]
    GroundTruthTooSmall {
        achieved: (usize, usize),
        requested: (usize, usize),
    },

    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),

    #[error("loss rate {0} outside [0, 0.95]")]
    LossRateOutOfRange(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

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

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
