use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("index {index} out of range (must be < {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("invalid usage: {0}")]
    Usage(String),
    #[error("shape mismatch: expected {expected} symbols, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("run complete: no round after round 3")]
    RunComplete,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("verdict undefined: {0}")]
    UndefinedVerdict(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
