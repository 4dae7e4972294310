use std::path::PathBuf;

use serde_json::json;

/// Failure of a CLI run. Each variant maps to a fixed exit code.
#[derive(Debug)]
pub enum CliError {
    ConfigUnreadable {
        path: PathBuf,
        reason: String,
    },
    ConfigParse {
        path: PathBuf,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    Invalid {
        field: String,
        message: String,
    },
    Numerical(logper::Error),
    Output {
        path: Option<PathBuf>,
        reason: String,
    },
}

pub const EXIT_CONFIG_UNREADABLE: i32 = 3;
pub const EXIT_CONFIG_INVALID: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;
pub const EXIT_OUTPUT: i32 = 6;

impl CliError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigUnreadable { .. } => EXIT_CONFIG_UNREADABLE,
            CliError::ConfigParse { .. } | CliError::Invalid { .. } => EXIT_CONFIG_INVALID,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Output { .. } => EXIT_OUTPUT,
        }
    }

    /// Single-line JSON error record.
    pub fn record(&self) -> String {
        let code = self.exit_code();
        let v = match self {
            CliError::ConfigUnreadable { path, reason } => json!({
                "error": "config-unreadable",
                "path": path.display().to_string(),
                "message": format!("cannot read config file {}: {reason}", path.display()),
                "exit_code": code,
            }),
            CliError::ConfigParse {
                path,
                line,
                column,
                message,
            } => json!({
                "error": "config-parse",
                "path": path.display().to_string(),
                "line": line,
                "column": column,
                "message": message,
                "exit_code": code,
            }),
            CliError::Invalid { field, message } => json!({
                "error": "invalid-config",
                "field": field,
                "message": message,
                "exit_code": code,
            }),
            CliError::Numerical(e) => json!({
                "error": "numerical",
                "message": e.to_string(),
                "exit_code": code,
            }),
            CliError::Output { path, reason } => json!({
                "error": "output",
                "path": path.as_ref().map(|p| p.display().to_string()),
                "message": reason,
                "exit_code": code,
            }),
        };
        v.to_string()
    }
}

impl From<logper::Error> for CliError {
    fn from(e: logper::Error) -> Self {
        CliError::Numerical(e)
    }
}
