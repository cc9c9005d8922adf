use rca_core::RcaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("budget or convergence error: {0}")]
    Budget(String),
}

impl CliError {
    /// 2 for bad input, 3 for an exhausted budget or a stalled solver.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Budget(_) => 3,
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            Self::Input(m) => Self::Input(format!("{what}: {m}")),
            Self::Budget(m) => Self::Budget(format!("{what}: {m}")),
        }
    }
}

impl From<RcaError> for CliError {
    fn from(e: RcaError) -> Self {
        match e {
            RcaError::BudgetExceeded { .. } | RcaError::NoConvergence(_) => Self::Budget(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}
