//! Machine-readable failures printed to standard error.

use serde::Serialize;
use serde_json::Value;
use spintomo::Error;

#[derive(Debug, Serialize)]
pub struct Failure {
    pub code: &'static str,
    pub message: String,
    pub context: Value,
    #[serde(skip)]
    pub exit_code: i32,
}

impl Failure {
    pub fn new(code: &'static str, message: impl Into<String>, context: Value) -> Self {
        let exit_code = if code == "no_convergence" || code == "internal" { 3 } else { 2 };
        Failure { code, message: message.into(), context, exit_code }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure::new("usage", message, Value::Null)
    }

    pub fn io(path: &str, err: std::io::Error) -> Self {
        Failure::new("io", err.to_string(), serde_json::json!({ "path": path }))
    }

    pub fn parse(path: &str, err: serde_json::Error) -> Self {
        Failure::new(
            "parse",
            err.to_string(),
            serde_json::json!({ "path": path, "line": err.line(), "column": err.column() }),
        )
    }

    pub fn with_context(mut self, key: &str, value: impl Into<Value>) -> Self {
        match &mut self.context {
            Value::Object(map) => {
                map.insert(key.to_string(), value.into());
            }
            other => {
                let mut map = serde_json::Map::new();
                map.insert(key.to_string(), value.into());
                *other = Value::Object(map);
            }
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"code\":\"{}\"}}", self.code))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidState(_) => "invalid_state",
            Error::BasisMismatch { .. } => "basis_mismatch",
            Error::InadequateGrid(_) => "inadequate_grid",
            Error::EmptyCandidates => "empty_candidates",
            Error::NoConvergence(_) => "no_convergence",
        };
        Failure::new(code, e.to_string(), Value::Null)
    }
}

pub type CliResult<T> = Result<T, Failure>;
