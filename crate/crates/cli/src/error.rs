//! Stage errors mapped onto the CLI exit-code contract.

use std::path::PathBuf;

use thiserror::Error;

/// Exit codes: 0 success, 2 validation error, 3 infeasibility, 4 missing
/// upstream outputs, 1 anything else.
#[derive(Debug, Error)]
pub enum StageError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("missing upstream output {path} — run the `{stage}` stage first")]
    UpstreamMissing { stage: String, path: PathBuf },
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::Validation(_) => 2,
            StageError::Infeasible(_) => 3,
            StageError::UpstreamMissing { .. } => 4,
            StageError::Other(_) => 1,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        StageError::Validation(message.into())
    }
}

impl From<forge_core::mixture::MixtureError> for StageError {
    fn from(err: forge_core::mixture::MixtureError) -> Self {
        use forge_core::mixture::MixtureError::*;
        match &err {
            Infeasible { .. } | EmptyCells { .. } | NoFeasiblePartition { .. } => {
                StageError::Infeasible(err.to_string())
            }
            InvalidSpec(_) | UnknownQuestion(_) => StageError::Validation(err.to_string()),
        }
    }
}

pub type StageResult<T> = Result<T, StageError>;
