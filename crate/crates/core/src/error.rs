use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AgeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AgeError {
    #[error("I/O error on {path}: {source}")]
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

    #[error("{path}: file contains no records")]
    EmptyInput { path: PathBuf },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("holdout infeasible: reached {achieved} of {target} held-out edges")]
    SplitInfeasible { achieved: usize, target: usize },

    #[error("not enough reversible positives for gamma={requested}; max feasible gamma is {max_feasible}")]
    GammaInfeasible { requested: f64, max_feasible: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {0} has no training examples")]
    MissingClass(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("dimension mismatch: checkpoint has d={found}, configuration expects d={expected}")]
    DimMismatch { expected: usize, found: usize },
}

impl AgeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AgeError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        AgeError::InvalidArgument(msg.into())
    }

    /// True for failures caused by numerics rather than by input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, AgeError::NonFinite { .. })
    }
}
