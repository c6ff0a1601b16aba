use std::path::PathBuf;

/// Failures surfaced by the command-line driver.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("fixture not found: {}", .0.display())]
    FixtureMissing(PathBuf),
    #[error(transparent)]
    Model(#[from] vlp_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical-consistency failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use vlp_core::Error as E;
        match self {
            CliError::Config(_) | CliError::FixtureMissing(_) => 2,
            CliError::Model(E::NumericalConsistency { .. }) => 3,
            CliError::Model(E::InvalidParameter(_) | E::InvalidGrid(_) | E::InfeasibleSpacing | E::UnsupportedKind) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
