use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("not an observable: {0}")]
    NotObservable(String),

    #[error("edge operator is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numeric consistency: {0}")]
    Numeric(String),

    #[error("implementation inconsistency: {0}")]
    Inconsistent(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors raised by size guards.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
