use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("malformed row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },

    #[error("inconsistent dimension at row {row}")]
    InconsistentDimension { row: usize },

    #[error("dataset has no feature vectors")]
    MissingFeatures,

    #[error("zero-norm vector at example {index} under cosine distance")]
    ZeroNorm { index: usize },

    #[error("dataset needs at least two distinct classes, found {found}")]
    SingleClass { found: usize },

    #[error("label space of size {0} exceeds the 64-label limit")]
    TooManyLabels(usize),

    #[error("reference pair must have j != k (got {0})")]
    SameReference(u32),

    #[error("id {id} out of range (universe size {n})")]
    IdOutOfRange { id: u64, n: usize },

    #[error("unsupported header: {0}")]
    VersionMismatch(String),

    #[error("malformed line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },

    #[error("duplicate triplet at line {line}")]
    DuplicateTriplet { line: usize },

    #[error("contradictory triplet at line {line}")]
    ContradictoryTriplet { line: usize },

    #[error("contradictory pair ({j}, {k}) for one example")]
    ContradictoryPair { j: u32, k: u32 },

    #[error("empty ratings table")]
    EmptyRatings,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("normalization factor is not positive ({0})")]
    NonPositiveNormalizer(f64),

    #[error("model has no classifier with positive weight")]
    EmptyModel,

    #[error("mismatch: {0}")]
    Mismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
