use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {locator}: {message}")]
    Parse { locator: String, message: String },

    #[error("invalid corpus: {0}")]
    Validation(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("cannot split {assays} assays into {folds} folds")]
    TooFewAssays { assays: usize, folds: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown assay id `{0}`")]
    UnknownAssay(String),

    #[error("{count} test assays also appear in the training set (first: `{first}`)")]
    TrainTestOverlap { count: usize, first: String },

    #[error("unknown statement id {0}")]
    UnknownStatement(u32),

    #[error("statement {0} already decided in this session")]
    AlreadyDecided(u32),

    #[error("gold statement `{0}` is not among the candidates")]
    GoldNotInCandidates(String),

    #[error("model is not trained")]
    Untrained,

    #[error("unsupported model file version {found} (supported: {supported})")]
    UnsupportedModelVersion { found: u32, supported: u32 },

    #[error("model file: {0}")]
    Model(String),

    #[error("remote service at {endpoint} unreachable: {message}")]
    Connection { endpoint: String, message: String },

    #[error("remote service at {endpoint} timed out")]
    Timeout { endpoint: String },

    #[error("remote service at {endpoint} failed: {message}")]
    Service { endpoint: String, message: String },

    #[error("protocol error from {endpoint}: {message}")]
    Protocol { endpoint: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(locator: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            locator: locator.into(),
            message: message.to_string(),
        }
    }

    /// True for failures talking to the remote inference service.
    pub fn is_remote(&self) -> bool {
        matches!(
            self,
            Error::Connection { .. }
                | Error::Timeout { .. }
                | Error::Service { .. }
                | Error::Protocol { .. }
        )
    }
}
