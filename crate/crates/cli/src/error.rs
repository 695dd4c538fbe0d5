use std::path::PathBuf;

use rti_core::relativistic_gate::GateRejection;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("channel amplitudes are all zero")]
    Normalization,
    #[error("{0}")]
    Gate(GateRejection),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        CliError::Io { path: path.into(), message: err.to_string() }
    }

    /// 1 for anything wrong with the input, 2 for filesystem failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema { .. } => "SchemaError",
            CliError::Normalization => "NormalizationError",
            CliError::Gate(_) => "GateRejection",
            CliError::Invalid(_) => "InvalidInput",
            CliError::Io { .. } => "IoError",
        }
    }

    /// Single-line JSON written to stderr.
    pub fn to_json(&self) -> String {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            CliError::Schema { path, .. } => body["path"] = json!(path),
            CliError::Gate(g) => body["rule"] = json!(g.rule),
            CliError::Io { path, .. } => body["path"] = json!(path.display().to_string()),
            _ => {}
        }
        json!({ "error": body }).to_string()
    }
}
