use gaborfio_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

/// One rejected config field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl Issue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config ({} issue(s))", .0.len())]
    Config(Vec<Issue>),
    #[error("not a frame: lower bound {lower:e}, upper bound {upper:e}")]
    NotAFrame { lower: f64, upper: f64 },
    #[error("{0}")]
    InsufficientRange(String),
    #[error("{0}")]
    ExtractionRadius(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config(vec![Issue::new(field, message)])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io(_) | CliError::Other(_) => 1,
            CliError::NotAFrame { .. } => 2,
            CliError::InsufficientRange(_) => 3,
            CliError::ExtractionRadius(_) => 4,
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> String {
        let issues = match self {
            CliError::Config(list) => list.clone(),
            other => vec![Issue::new("", other.to_string())],
        };
        serde_json::json!({ "exit_code": self.exit_code(), "errors": issues }).to_string()
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NotAFrame { lower, upper } => CliError::NotAFrame { lower, upper },
            CoreError::InsufficientRange { .. } => CliError::InsufficientRange(e.to_string()),
            CoreError::ExtractionRadius { .. } => CliError::ExtractionRadius(e.to_string()),
            CoreError::NotGridRepresentable { .. }
            | CoreError::InvalidGrid(_)
            | CoreError::IncommensurateGenerator { .. }
            | CoreError::SingularGenerator { .. }
            | CoreError::SizeGuard { .. }
            | CoreError::Unsupported(_)
            | CoreError::InvalidArgument(_) => CliError::config("", e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(format!("csv: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
