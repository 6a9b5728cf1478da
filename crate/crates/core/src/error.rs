use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
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

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("no trainable tokens")]
    NoTrainableTokens,

    #[error("out of vocabulary: {0}")]
    OutOfVocabulary(String),

    #[error("fewer points than clusters ({points} < {clusters})")]
    TooFewPoints { points: usize, clusters: usize },

    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown id in candidates: {0}")]
    DanglingId(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible configuration: {0}")]
    Incompatible(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }
}
