use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Level text did not match the codec grammar.
    #[error("parse error in field `{field}`: {message}")]
    Parse { field: &'static str, message: String },

    /// Structurally well-formed value that breaks a domain rule.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("wrong level kind: expected {expected}, got {actual}")]
    WrongKind { expected: &'static str, actual: &'static str },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("episode already finished")]
    EpisodeDone,

    #[error("level buffer is empty")]
    EmptyBuffer,

    #[error("unknown level id {0}")]
    UnknownLevel(u64),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    /// Loss or gradient went NaN/inf during an update.
    #[error("non-finite training signal: {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("audit violation: {0}")]
    Audit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(field: &'static str, message: impl Into<String>) -> Self {
        Error::Parse { field, message: message.into() }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }
}
