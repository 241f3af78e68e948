use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid run configuration, detected before any sampling.
    #[error("configuration error: {0}")]
    Config(String),
    /// Malformed or non-finite observations.
    #[error("data error at row {row}: {msg}")]
    Data { row: usize, msg: String },
    /// A numerical procedure broke down (non-positive variance, total weight underflow, ...).
    #[error("numerical failure{}: {msg}", .t.map(|t| format!(" at t={t}")).unwrap_or_default())]
    Numerical { t: Option<usize>, msg: String },
}

impl Error {
    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical { t: None, msg: msg.into() }
    }

    pub(crate) fn numerical_at(t: usize, msg: impl Into<String>) -> Self {
        Error::Numerical { t: Some(t), msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
