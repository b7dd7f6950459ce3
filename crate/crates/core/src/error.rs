use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid hazard model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The limit laws degenerate when E[-log(1-H)] is infinite.
    #[error("mu_log is infinite; limit laws are degenerate for this model")]
    InfiniteMuLog,

    #[error("box count exceeded the cap of {0}")]
    BoxCapExceeded(usize),

    #[error("path value exceeded the cap of {0}")]
    PathCapExceeded(u64),

    /// The point processes were not extended far enough; extend and retry.
    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("json: {0}")]
    Json(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
