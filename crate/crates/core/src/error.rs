use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("indeterminate at u-precision {precision}: {what}")]
    Indeterminate { what: String, precision: i64 },
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Precondition(_) | Error::Parse { .. } => 2,
            Error::Resource(_) => 3,
            Error::Indeterminate { .. } => 4,
        }
    }

    pub fn pre(msg: impl Into<String>) -> Error {
        Error::Precondition(msg.into())
    }

    pub fn indeterminate(what: impl Into<String>, precision: i64) -> Error {
        Error::Indeterminate { what: what.into(), precision }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
