use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

use crate::config::ConfigIssue;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config ({} problem(s))", .0.len())]
    Config(Vec<ConfigIssue>),

    #[error(transparent)]
    Core(#[from] fluxlab::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("report: {0}")]
    Report(String),

    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "numerics",
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
            CliError::Report(_) => "report",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Machine-readable form written to stderr on failure.
    pub fn to_json(&self) -> Value {
        let issues: Vec<Value> = match self {
            CliError::Config(list) => list.iter().map(|i| json!({ "path": i.path, "message": i.message })).collect(),
            other => vec![json!({ "path": "", "message": other.to_string() })],
        };
        json!({ "error": self.kind(), "issues": issues })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
