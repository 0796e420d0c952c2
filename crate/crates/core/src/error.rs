use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("streamline must have at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),

    #[error("zero-length streamline")]
    ZeroLength,

    #[error("resample count must be at least 2, got {0}")]
    BadResampleCount(usize),

    #[error("point count mismatch: {0} vs {1}")]
    PointCountMismatch(usize, usize),

    #[error("medial point requires an odd point count, got {0}")]
    EvenPointCount(usize),

    #[error("degenerate shape angle")]
    DegenerateShapeAngle,

    #[error("degenerate direction")]
    DegenerateDirection,

    #[error("empty streamline set")]
    EmptySet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("atlas bundle too small: '{id}' has {count} streamlines (need at least 2)")]
    BundleTooSmall { id: String, count: usize },

    #[error("duplicate bundle id '{0}'")]
    DuplicateBundle(String),

    #[error("invalid bundle id '{0}'")]
    InvalidBundleId(String),

    #[error("empty subject tractogram")]
    EmptySubject,

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: format version mismatch (expected {expected}, found {found})")]
    VersionMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True when the error stems from malformed input rather than a failure
    /// while processing valid input.
    /// Missing input files count as input errors; other I/O failures do not.
    pub fn is_input_error(&self) -> bool {
        if let Error::Io { source, .. } = self {
            return source.kind() == std::io::ErrorKind::NotFound;
        }
        !matches!(
            self,
            Error::DegenerateShapeAngle
                | Error::DegenerateDirection
                | Error::PointCountMismatch(..)
        )
    }
}
