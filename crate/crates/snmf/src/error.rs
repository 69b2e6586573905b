use std::path::PathBuf;

/// Error type shared across the whole crate.
#[derive(Debug, thiserror::Error)]
pub enum SnmfError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("zero denominator at ({row}, {col})")]
    ZeroDenominator { row: usize, col: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("variance must be positive, got {value} at index {index}")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("rank {rank} too large for a {rows}x{cols} matrix")]
    RankTooLarge { rank: usize, rows: usize, cols: usize },
    #[error("matrix has no positive entries")]
    ZeroMatrix,
    #[error("objective evaluated to a non-finite value")]
    NonFiniteObjective,
    #[error("labels contain a single class; fitting a classifier is degenerate")]
    LossDegenerate,
    #[error("scores contain a single class")]
    SingleClass,
    #[error("a class would be empty after the split")]
    EmptyClassAfterSplit,
    #[error("too few samples: every class needs at least {needed} members, class {class} has {got}")]
    TooFewSamples { class: u8, needed: usize, got: usize },
    #[error("dimension mismatch: model expects {expected} features, data has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("grid spec parse error: {0}")]
    GridParse(String),
    #[error("dataset error in {path}: {message}")]
    Dataset { path: PathBuf, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SnmfError {
    /// Stable one-word category used for machine-parsable CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            SnmfError::ShapeMismatch(_) => "ShapeMismatch",
            SnmfError::ZeroDenominator { .. } => "ZeroDenominator",
            SnmfError::NegativeEntry { .. } => "NegativeEntry",
            SnmfError::NonFiniteEntry { .. } => "NonFiniteEntry",
            SnmfError::NonPositiveVariance { .. } => "NonPositiveVariance",
            SnmfError::RankTooLarge { .. } => "RankTooLarge",
            SnmfError::ZeroMatrix => "ZeroMatrix",
            SnmfError::NonFiniteObjective => "NonFiniteObjective",
            SnmfError::LossDegenerate => "LossDegenerate",
            SnmfError::SingleClass => "SingleClass",
            SnmfError::EmptyClassAfterSplit => "EmptyClassAfterSplit",
            SnmfError::TooFewSamples { .. } => "TooFewSamples",
            SnmfError::DimensionMismatch { .. } => "DimensionMismatch",
            SnmfError::InvalidConfig(_) => "InvalidConfig",
            SnmfError::GridParse(_) => "GridParseError",
            SnmfError::Dataset { .. } => "DatasetError",
            SnmfError::Io(_) => "IoError",
            SnmfError::Json(_) => "JsonError",
        }
    }
}

pub type Result<T> = std::result::Result<T, SnmfError>;
