use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Weight file and channel configuration disagree (N, K or power).
    #[error("weights do not match configuration: {0}")]
    Mismatch(String),

    /// A tracked statistic left its valid range (e.g. a non-positive error variance).
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Weights(#[from] WeightsError),

    #[error("{}: {source}", path.display())]
    WeightFile {
        path: PathBuf,
        #[source]
        source: WeightsError,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by files (missing, unreadable, malformed) rather than by arguments.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv { .. }
                | Error::Json { .. }
                | Error::Weights(_)
                | Error::WeightFile { .. }
        )
    }
}

/// Structured failure while decoding a weight file.
#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("bad magic bytes (expected \"GBCF\")")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("file ends inside {0}")]
    Truncated(String),
    #[error("invalid metadata header: {0}")]
    Header(String),
    #[error("tensor `{tensor}`: expected shape {expected:?}, found {found:?}")]
    Shape {
        tensor: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("tensor `{0}`: checksum mismatch")]
    Checksum(String),
    #[error("tensor `{0}`: non-finite entry")]
    NonFinite(String),
    #[error("missing tensor `{0}`")]
    Missing(String),
    #[error("unexpected tensor `{0}`")]
    Unexpected(String),
    #[error("duplicate tensor `{0}`")]
    Duplicate(String),
    #[error("trailing bytes after last tensor")]
    TrailingBytes,
    #[error("{0}")]
    Invalid(String),
}
