use thiserror::Error;

use crate::linalg::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("starting point entry ({row}, {col}) = {value} is not in the phase set")]
    InfeasibleStart { row: usize, col: usize, value: C64 },

    #[error("weight matrix of user {user} is not positive definite")]
    NotPositiveDefinite { user: usize },

    #[error("MSE bracket of user {user} is numerically singular (condition number {cond:e})")]
    SingularBracket { user: usize, cond: f64 },

    #[error("malformed channel file: {0}")]
    ChannelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
