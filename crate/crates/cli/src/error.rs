use serde::Serialize;
use thiserror::Error;

/// Input errors exit with status 2; failed checks are not errors and exit with 1.
#[derive(Debug, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: field `{field}`: {message}")]
    Parse { path: String, line: usize, column: usize, field: String, message: String },
    #[error("invalid `{invariant}`: {message}")]
    Invalid { invariant: String, message: String },
    #[error("solver failure: {message}")]
    Solver { message: String },
    #[error("cannot write output: {message}")]
    Output { message: String },
}

impl CliError {
    pub fn invalid(invariant: &str, err: mirrorcert::Error) -> Self {
        Self::Invalid { invariant: invariant.to_string(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        2
    }

    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("error records serialize");
        value["description"] = serde_json::Value::String(self.to_string());
        value.to_string()
    }
}

impl From<mirrorcert::Error> for CliError {
    fn from(e: mirrorcert::Error) -> Self {
        Self::Solver { message: e.to_string() }
    }
}
