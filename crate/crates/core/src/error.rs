use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdlError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("shape mismatch at `{at}`: {msg}")]
    Shape { at: String, msg: String },
    #[error("fragment error: {0}")]
    Fragment(String),
    #[error("bound exceeded: {0}")]
    Bound(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl PdlError {
    pub fn shape(at: impl ToString, msg: impl Into<String>) -> Self {
        PdlError::Shape { at: at.to_string(), msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, PdlError>;
