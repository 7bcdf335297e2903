use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input supplied by a caller.
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration document violates one or more constraints. Every
    /// violation found is listed, not only the first.
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },

    /// Event log could not be replayed; `line` is 1-based.
    #[error("event log line {line}: {reason}")]
    Replay { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("yaml: {0}")]
    Yaml(#[from] serde_yaml::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad input rather than by the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
