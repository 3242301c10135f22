use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("random-regular generation failed after {0} attempts")]
    GenerationFailed(u32),
    #[error("protocol violation at node {node} in round {round}: {reason}")]
    ProtocolViolation {
        node: usize,
        round: u64,
        reason: String,
    },
    #[error("value {value} exceeds declared range ±{bound}")]
    RangeOverflow { value: i128, bound: u128 },
    #[error("{what} exceeded its cap of {cap}")]
    CapExceeded { what: &'static str, cap: u64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("nodes disagree on {0}")]
    Disagreement(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
