use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// 0 success, 2 configuration, 3 data, 4 numerical, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<svmix::Error> for CliError {
    fn from(e: svmix::Error) -> Self {
        match e {
            svmix::Error::Config(m) => CliError::Config(m),
            svmix::Error::Domain(m) => CliError::Config(format!("invalid value: {m}")),
            svmix::Error::Data { row, msg } => CliError::Data(format!("row {row}: {msg}")),
            svmix::Error::Numerical { t: Some(t), msg } => CliError::Numerical(format!("at t={t}: {msg}")),
            svmix::Error::Numerical { t: None, msg } => CliError::Numerical(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
