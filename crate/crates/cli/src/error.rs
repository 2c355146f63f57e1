//! Runner errors and their machine-readable records.

use std::path::Path;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, key: Option<String>, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] carleman_core::Error),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &Path, e: &dyn std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn from_toml(text: &str, e: &toml::de::Error) -> Self {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let message = e.message().to_string();
        let key = message
            .split('`')
            .nth(1)
            .filter(|_| message.contains("field") || message.contains("key"))
            .map(str::to_string);
        CliError::Parse { line, key, message }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "ParseError",
            CliError::Validation(_) => "ValidationError",
            CliError::Core(_) => "ModuleError",
            CliError::Io { .. } => "IoError",
        }
    }

    /// JSON record written to stderr on failure.
    pub fn record(&self) -> serde_json::Value {
        let mut record = json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Parse { line, key, .. } = self {
            record["line"] = json!(line);
            record["key"] = json!(key);
        }
        if let CliError::Core(e) = self {
            record["detail"] = json!(format!("{e:?}"));
        }
        record
    }
}
