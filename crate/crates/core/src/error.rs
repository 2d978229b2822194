use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension {0} is not supported (1..=3)")]
    Dimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The requested tolerance was not reached within the configured budget.
    /// Carries the best estimate and the error actually achieved.
    #[error("budget exhausted: best estimate {value} with error {achieved} (requested {requested})")]
    BudgetExhausted {
        value: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("recursion depth {0} exceeded before the Whitney size condition was met")]
    DepthExceeded(u32),

    #[error("point {0:?} lies outside the grid box")]
    OutsideGrid(Vec<f64>),

    #[error("unknown corpus entry `{0}`")]
    UnknownCorpusEntry(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
