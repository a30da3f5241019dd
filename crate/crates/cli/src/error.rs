use std::path::PathBuf;

use thiserror::Error;
use xwalk_core::XwalkError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("n = {n}, replica {replica}, seed {seed}: {source}")]
    Run {
        n: u32,
        replica: u64,
        seed: u64,
        #[source]
        source: XwalkError,
    },
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: XwalkError,
    },
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("thread pool: {0}")]
    Pool(String),
    /// A shared run failed; carries its message to each dependent check.
    #[error("{0}")]
    Upstream(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T>;
}

impl<T> Context<T> for xwalk_core::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T> {
        self.map_err(|source| CliError::Model {
            context: what.into(),
            source,
        })
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}
