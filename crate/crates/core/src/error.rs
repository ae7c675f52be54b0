use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report. Each variant maps to a stable,
/// machine-readable code through [`Error::code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("{field}: unknown label `{name}`")]
    UnknownLabelAt { field: String, name: String },

    #[error("story `{story_id}` has {found} sentences, expected 5")]
    WrongSentenceCount { story_id: String, found: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("no classifier available for augmentation")]
    ClassifierUnavailable,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value produced by {0}")]
    NonFiniteValue(String),

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalarLoss(Vec<usize>),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("every character slot is padding")]
    AllCharactersMasked,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("loss diverged at epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("gradient check failed: max relative error {max_rel_error:.3e} exceeds {tolerance:.0e}")]
    GradientMismatch { max_rel_error: f64, tolerance: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("model is not loaded")]
    ModelNotLoaded,

    #[error("unknown decode mode `{0}`")]
    UnknownDecodeMode(String),

    #[error("{field}: arc length mismatch: {reason}")]
    ArcLengthMismatch { field: String, reason: String },

    #[error("malformed JSON: {0}")]
    MalformedJson(String),

    #[error("{field}: {reason}")]
    InvalidRequest { field: String, reason: String },

    #[error("no (sentence, character) pair has a nonzero target")]
    NoEvaluablePairs,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable identifier used on the CLI, over HTTP and across the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedRecord { .. } => "MALFORMED_RECORD",
            Error::UnknownLabel(_) | Error::UnknownLabelAt { .. } => "UNKNOWN_LABEL",
            Error::WrongSentenceCount { .. } => "WRONG_SENTENCE_COUNT",
            Error::EmptyCorpus => "EMPTY_CORPUS",
            Error::ClassifierUnavailable => "CLASSIFIER_UNAVAILABLE",
            Error::ShapeMismatch(_) => "SHAPE_MISMATCH",
            Error::NonFiniteValue(_) => "NON_FINITE_VALUE",
            Error::NotScalarLoss(_) => "NOT_SCALAR_LOSS",
            Error::EmptyInput(_) => "EMPTY_INPUT",
            Error::AllCharactersMasked => "ALL_CHARACTERS_MASKED",
            Error::LengthMismatch(_) => "LENGTH_MISMATCH",
            Error::DivergedLoss { .. } => "DIVERGED_LOSS",
            Error::GradientMismatch { .. } => "GRADIENT_MISMATCH",
            Error::EmptyDataset => "EMPTY_DATASET",
            Error::ModelNotLoaded => "MODEL_NOT_LOADED",
            Error::UnknownDecodeMode(_) => "UNKNOWN_DECODE_MODE",
            Error::ArcLengthMismatch { .. } => "ARC_LENGTH_MISMATCH",
            Error::MalformedJson(_) => "MALFORMED_JSON",
            Error::InvalidRequest { .. } => "INVALID_REQUEST",
            Error::NoEvaluablePairs => "NO_EVALUABLE_PAIRS",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::Checkpoint(_) => "CHECKPOINT",
            Error::Io { .. } => "IO",
            Error::Json(_) => "JSON",
        }
    }

    /// Request field the error refers to, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::ArcLengthMismatch { field, .. }
            | Error::InvalidRequest { field, .. }
            | Error::UnknownLabelAt { field, .. } => {
                Some(field)
            }
            Error::UnknownDecodeMode(_) => Some("decode"),
            _ => None,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
