use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    State(String),

    /// A config or instance document failed validation. `field` names the offending key.
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("format error in {context}: {message}")]
    Format { context: String, message: String },

    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("subset enumeration refused: C({n},{k}) = {subsets} exceeds cap {cap}")]
    EnumerationCap {
        n: usize,
        k: usize,
        subsets: u128,
        cap: u128,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Whether the error stems from user input (bad flags, config, files) rather than
    /// a failure while running.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Validation { .. }
                | Error::Format { .. }
                | Error::Read { .. }
        )
    }
}
