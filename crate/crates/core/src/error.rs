use thiserror::Error;

use crate::subprotocols::broadcast::BroadcastError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("uncorrectable verification error rate {delta} (must be below 1/2)")]
    Uncorrectable { delta: f64 },
    #[error(transparent)]
    Broadcast(#[from] BroadcastError),
    #[error("source exhausted after {0} states")]
    SourceExhausted(usize),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
