use thiserror::Error;

/// Errors produced while building or querying hierarchy instances and their data.
#[derive(Debug, Error)]
pub enum RhmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("tuple {tuple:?} is not generated by the rule at level {level}")]
    UnknownTuple { level: usize, tuple: Vec<usize> },

    #[error("unsupported construction: {0}")]
    UnsupportedConstruction(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("dataset of size {p_max} exceeds the enumeration cap {cap}")]
    CapExceeded { p_max: String, cap: u64 },

    #[error("requested {requested} distinct data but the instance only has {available}")]
    TooManySamples { requested: u64, available: String },

    #[error("degenerate representation: {0}")]
    Degenerate(String),

    #[error("not enough samples: {0}")]
    NotEnoughSamples(String),

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RhmError>;

impl From<serde_json::Error> for RhmError {
    fn from(e: serde_json::Error) -> Self {
        RhmError::Parse {
            what: "json",
            detail: format!("line {}, column {}: {}", e.line(), e.column(), e),
        }
    }
}

impl From<csv::Error> for RhmError {
    fn from(e: csv::Error) -> Self {
        let detail = match e.position() {
            Some(pos) => format!("line {}: {}", pos.line(), e),
            None => e.to_string(),
        };
        RhmError::Parse { what: "csv", detail }
    }
}
