use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Environment parameters outside their valid range.
    #[error("cannot construct environment: {0}")]
    Construction(String),

    /// A state or action index that the environment does not define.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    /// The observed history cannot have been produced by the hypothesized model.
    #[error("inconsistent model: {0}")]
    InconsistentModel(String),

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
