use thiserror::Error;

/// Errors raised by model construction, estimation and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rank deficient design: {0}")]
    RankDeficient(String),

    #[error("group `{0}` has no category mapping")]
    UnmappedGroup(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::RankDeficient(_) | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
