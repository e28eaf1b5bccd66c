use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigIssue;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] fdnls_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(
        "manifest was written by fdnls {found}, this is {expected}; \
         check out that version to replay it, or start a fresh run from its config"
    )]
    Version { found: String, expected: String },
    #[error("{0}")]
    Usage(String),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {}: {}", i.key, i.reason))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
    let path = path.into();
    move |source| LabError::Io { path, source }
}

pub(crate) fn format_err(path: impl Into<PathBuf>, message: impl ToString) -> LabError {
    LabError::Format {
        path: path.into(),
        message: message.to_string(),
    }
}
