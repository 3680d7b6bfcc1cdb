use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model invariant violated: {0}")]
    ModelInvariant(String),

    #[error("resource limit: {what} needs {required_bytes} bytes, budget is {budget_bytes} bytes")]
    Resource {
        what: &'static str,
        required_bytes: u128,
        budget_bytes: u128,
    },

    #[error("non-finite value encountered at iteration {iteration}")]
    Numerical { iteration: usize },

    #[error("degenerate direction: a is parallel to the estimate (projected norm {projected})")]
    DegenerateDirection { projected: f64 },

    #[error("unsupported tensor order k = {0} (mixture weights need k >= 3)")]
    UnsupportedOrder(usize),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
