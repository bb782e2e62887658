use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toporeg library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("k = {k} is out of range for a cloud of {n} points (need 1 <= k <= n - 1)")]
    NeighborCount { k: usize, n: usize },

    #[error("coordinate spread is zero; pass an explicit bandwidth instead of the automatic rule")]
    ZeroBandwidth,

    #[error("covariance is rank deficient (rank {rank} < {requested} requested components)")]
    RankDeficient { rank: usize, requested: usize },

    #[error("non-finite state at integration step {step}; reduce the time step")]
    NonFiniteState { step: usize },

    #[error("Rips complex needs {edges} edges, over the budget of {budget} edges")]
    EdgeBudget { edges: usize, budget: usize },

    #[error("feature is not a finite loop")]
    NotALoop,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("internal: {0}")]
    Internal(String),
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

pub type Result<T> = std::result::Result<T, Error>;
