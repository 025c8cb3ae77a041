use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("inadmissible state: {0}")]
    Inadmissible(String),
    #[error("oracle disagreement: max residual {residual:.3e} exceeds tolerance {tol:.1e} at t = {t}")]
    OracleDisagreement { residual: f64, tol: f64, t: f64 },
    #[error(transparent)]
    Core(#[from] metaphase_core::Error),
    #[error(transparent)]
    Oracle(#[from] metaphase_oracle::OracleError),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Inadmissible(_) => 3,
            CliError::Core(metaphase_core::Error::Inadmissible { .. }) => 3,
            CliError::Oracle(metaphase_oracle::OracleError::Core(metaphase_core::Error::Inadmissible { .. })) => 3,
            CliError::OracleDisagreement { .. } => 4,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
