use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
}
