use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("column `{0}` has non-binary label values")]
    NonBinaryLabel(String),
    #[error("no labels remain after filtering")]
    NoLabelsRemain,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("invalid chain order: {0}")]
    InvalidChainOrder(String),
    #[error("cannot build {folds} folds from {n} instances")]
    InvalidFolds { folds: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("prediction set has no truth")]
    MissingTruth,
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("unsupported {what} format version {found} (supported: {supported})")]
    VersionMismatch {
        what: &'static str,
        found: u32,
        supported: u32,
    },
    #[error("corrupted block: {0}")]
    CorruptedBlock(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by reading or decoding input files.
    pub fn is_ingestion(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Io(_)
                | Error::VersionMismatch { .. }
                | Error::CorruptedBlock(_)
                | Error::UnknownTarget(_)
                | Error::NonBinaryLabel(_)
                | Error::InvalidDataset(_)
        )
    }
}
