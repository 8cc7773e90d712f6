use risk_core::RiskError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] RiskError),

    #[error("GARCH fit did not converge after {0} iterations")]
    NotConverged(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 data, 3 fit, 4 config, 5 tail too small.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                RiskError::Schema(_)
                | RiskError::Data(_)
                | RiskError::Window { .. }
                | RiskError::Alignment(_)
                | RiskError::Io(_)
                | RiskError::Csv(_)
                | RiskError::Json(_) => 2,
                RiskError::Estimation(_) => 3,
                RiskError::Domain(_) | RiskError::Parameter(_) | RiskError::Config(_) => 4,
                RiskError::TailTooSmall(_) => 5,
            },
            CliError::Io { .. } => 2,
            CliError::NotConverged(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
