use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("unknown joint `{0}`")]
    UnknownJoint(String),

    #[error("degenerate angle at joints ({a}, {pivot}, {b}): coincident positions")]
    DegenerateAngle { a: usize, pivot: usize, b: usize },

    #[error("roster entry {position} (`{id}`): {cause}")]
    Roster {
        position: usize,
        id: String,
        cause: Box<Error>,
    },

    #[error("no bin set named `{0}`")]
    MissingBins(String),

    #[error("no template for category `{0}`")]
    MissingTemplate(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("predictions reference unknown query ids: {0:?}")]
    UnknownQueryIds(Vec<String>),

    #[error("{path}: line {line}: field `{field}`: {message}")]
    Record {
        path: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("truncated matrix: expected {expected} bytes, found {actual}")]
    TruncatedMatrix { expected: usize, actual: usize },

    #[error("bad matrix header: {0}")]
    BadMatrix(String),

    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{0}")]
    Pipeline(Box<crate::pres3::PipelineFailure>),

    #[error("json: {0}")]
    Json(serde_json::Error),
}

// Messages above embed their cause, so none is exposed as a `source`;
// chained reporters would otherwise print it twice.
impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }
}
