use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Missing or inconsistent model / toolkit configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input that carries no usable information (e.g. a fit over a single angle).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Malformed text input. `line` is 1-based.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    /// A trial log with too many invalid samples to repair.
    #[error("trial rejected: {invalid} of {total} samples invalid ({:.2}% > {:.2}% limit)", fraction * 100.0, limit * 100.0)]
    Rejected {
        invalid: usize,
        total: usize,
        fraction: f64,
        limit: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(source_name: &str, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: msg.into(),
        }
    }
}
