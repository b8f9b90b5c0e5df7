use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("output encoding failed: {0}")]
    Encode(String),

    #[error(transparent)]
    Numerical(#[from] collisional::Error),

    #[error("{failed} of {total} grid points failed; see the status column")]
    PointFailures { failed: usize, total: usize },

    #[error("diagnostic threshold exceeded: {0}")]
    Threshold(String),
}

impl CliError {
    /// Process exit status: 1 for bad input, 2 for numerical failures,
    /// 3 when a diagnostic exceeds its threshold.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Read { .. } => 1,
            CliError::Numerical(e) => match e {
                collisional::Error::InvalidParameter(_) | collisional::Error::DimensionMismatch { .. } => 1,
                _ => 2,
            },
            CliError::Write { .. } | CliError::Encode(_) | CliError::PointFailures { .. } => 2,
            CliError::Threshold(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
