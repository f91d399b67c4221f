use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {kind} parameters: {reason}")]
    InvalidParams { kind: ModelKind, reason: String },

    #[error("input rate must be a finite non-negative number, got {0}")]
    InvalidRate(f64),

    #[error("invalid economic parameters: {0}")]
    InvalidEconomics(String),

    #[error("invalid arm grid: {0}")]
    InvalidGrid(String),

    #[error("invalid optimization domain [{lo}, {hi}]")]
    InvalidDomain { lo: f64, hi: f64 },

    #[error("invalid policy configuration: {0}")]
    InvalidPolicy(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("run records disagree in length: expected {expected}, found {found}")]
    MismatchedRecords { expected: usize, found: usize },

    #[error("no run records to aggregate or write")]
    EmptyRecords,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
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
}
