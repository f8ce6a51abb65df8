use std::path::PathBuf;

use thiserror::Error;

use crate::graph::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is empty")]
    EmptyGraph,

    #[error("unknown node `{0}`")]
    UnknownNode(Label),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing API credential: environment variable `{0}` is not set")]
    Credential(String),

    #[error("authentication failed: {0}")]
    Auth(String),

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("request rejected: {0}")]
    Rejected(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("could not extract node labels from response: {raw:?}")]
    ResponseParse { raw: String },

    #[error("operator context does not match role `{0}`")]
    RoleMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
