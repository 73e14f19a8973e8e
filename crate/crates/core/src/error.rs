use thiserror::Error;

pub type Result<T> = std::result::Result<T, QifError>;

#[derive(Debug, Error)]
pub enum QifError {
    #[error("label set must not be empty")]
    EmptySpace,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, outside tolerance of 1")]
    NotNormalized { sum: f64 },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("secret spaces do not match")]
    SpaceMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("row {row} is not a probability distribution (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("invalid gain function: {0}")]
    InvalidGain(String),
    #[error("environmental vulnerability is zero; strategy vulnerability is undefined")]
    ZeroEnvironmentalVulnerability,
    #[error("model is not an abstraction of the environment (residual {residual:.3e})")]
    NotAnAbstraction { residual: f64 },
    #[error("higher-order hyper has depth {0}, at least 2 required")]
    DepthTooSmall(usize),
    #[error("children of a node must share one depth")]
    RaggedDepth,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("{bad} malformed rows exceed the limit of {limit}")]
    TooManyMalformed { bad: usize, limit: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
