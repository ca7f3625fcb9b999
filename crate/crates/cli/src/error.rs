use pdc_core::PdcError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("output error: {0}")]
    Output(String),

    /// Verification ran but at least one criterion failed.
    #[error("{0} acceptance criteria failed")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Output(_) | CliError::Verification(_) => 3,
        }
    }
}

impl From<PdcError> for CliError {
    fn from(e: PdcError) -> Self {
        if e.is_configuration() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}
