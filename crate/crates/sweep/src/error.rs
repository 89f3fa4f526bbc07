use demon_core::DemonError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(#[from] DemonError),

    #[error("{failed} of {total} points failed, above the 5% budget")]
    FailureBudget { failed: usize, total: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl SweepError {
    /// Process exit code: 1 configuration, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Config(_) => 1,
            SweepError::Numerical(_) | SweepError::FailureBudget { .. } => 2,
            SweepError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for SweepError {
    fn from(e: std::io::Error) -> Self {
        SweepError::Io(e.to_string())
    }
}

impl From<csv::Error> for SweepError {
    fn from(e: csv::Error) -> Self {
        SweepError::Io(e.to_string())
    }
}

pub type SweepResult<T> = std::result::Result<T, SweepError>;
