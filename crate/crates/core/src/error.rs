use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("region {0} escapes the domain")]
    EscapesDomain(String),

    #[error("point lies outside the region: {0}")]
    OutsideRegion(String),

    #[error("empty region: no accepted samples after {0} draws")]
    EmptyRegion(usize),

    #[error("budget {got} is below the minimum {min}")]
    BudgetTooSmall { got: usize, min: usize },

    #[error("field is not time-split")]
    NotTimeSplit,

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("rank-deficient least-squares system (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("no admissible (center, radius) pair found after {0} attempts")]
    NoAdmissibleBall(usize),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
