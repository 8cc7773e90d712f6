use thiserror::Error;

pub type Result<T> = std::result::Result<T, RiskError>;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("window error: t={t} is smaller than window length m={m}")]
    Window { t: usize, m: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("config error: {0}")]
    Config(String),

    /// The tail of a simulated distribution holds too few paths to estimate.
    #[error("tail too small: {0}")]
    TailTooSmall(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
