use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    /// A loaded or constructed value breaks one of its data-model invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error in {path}: {source} (line {line}, column {column})")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("routing error: {0}")]
    Routing(String),

    #[error("instance too large for exact solver: {n} > {max}")]
    Size { n: usize, max: usize },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("plan validation failed: {0}")]
    Validation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

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

    pub(crate) fn parse(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Parse {
            path: path.into(),
            line: source.line(),
            column: source.column(),
            source,
        }
    }
}
