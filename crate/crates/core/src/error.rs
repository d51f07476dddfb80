use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown value {value:?} for categorical attribute {attribute}")]
    UnknownCategory { attribute: String, value: String },

    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse { row: usize, column: String, value: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },

    #[error("missing column {0} in header")]
    MissingColumn(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("AuC undefined: labels contain a single class")]
    SingleClass,

    #[error("model not trained: {0}")]
    NotTrained(String),

    #[error("variant {variant} has no {component}")]
    MissingComponent { variant: String, component: &'static str },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("loss became non-finite at epoch {epoch} (value {value})")]
    NonFiniteLoss { epoch: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
