use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use ebmeta_core::dynamics::RunError;
use ebmeta_core::surface::SurfaceError;
use ebmeta_core::transform::TransformError;
use ebmeta_core::Valuation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Fail,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Input {
    pub sha256: Option<String>,
}

impl Input {
    pub fn of(bytes: Option<&[u8]>) -> Self {
        Input {
            sha256: bytes.map(|b| hex::encode(Sha256::digest(b))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Valuation>,
}

impl ErrorInfo {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        ErrorInfo {
            kind: kind.into(),
            message: message.into(),
            line: None,
            column: None,
            witness: None,
        }
    }
}

impl From<&SurfaceError> for ErrorInfo {
    fn from(e: &SurfaceError) -> Self {
        let span = e.span();
        ErrorInfo {
            line: span.map(|s| s.line),
            column: span.map(|s| s.column),
            ..ErrorInfo::new(e.kind(), e.to_string())
        }
    }
}

impl From<&RunError> for ErrorInfo {
    fn from(e: &RunError) -> Self {
        let witness = match e {
            RunError::GuardNotEntailed { witness, .. } | RunError::TransparencyViolation { witness } => {
                Some(witness.clone())
            }
            _ => None,
        };
        ErrorInfo {
            witness,
            ..ErrorInfo::new(e.kind(), e.to_string())
        }
    }
}

impl From<&TransformError> for ErrorInfo {
    fn from(e: &TransformError) -> Self {
        ErrorInfo::new(e.kind(), e.to_string())
    }
}

/// What a command produced, before it is wrapped into a [`Report`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub exit_code: i32,
    pub payload: Value,
    pub error: Option<ErrorInfo>,
    pub summary: Vec<String>,
}

impl Outcome {
    pub fn ok(payload: Value, summary: Vec<String>) -> Self {
        Outcome {
            status: Status::Ok,
            exit_code: EXIT_OK,
            payload,
            error: None,
            summary,
        }
    }

    pub fn fail(exit_code: i32, payload: Value, summary: Vec<String>) -> Self {
        Outcome {
            status: Status::Fail,
            exit_code,
            payload,
            error: None,
            summary,
        }
    }

    pub fn error(info: ErrorInfo) -> Self {
        let summary = vec![format!("error: {}", info.message)];
        Outcome {
            status: Status::Error,
            exit_code: EXIT_ERROR,
            payload: Value::Null,
            error: Some(info),
            summary,
        }
    }

    pub fn with_error(mut self, info: ErrorInfo) -> Self {
        self.error = Some(info);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: Input,
    pub status: Status,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub payload: Value,
}

impl Report {
    pub fn new(command: &'static str, input: Input, outcome: &Outcome) -> Self {
        Report {
            tool: "ebmeta",
            version: env!("CARGO_PKG_VERSION"),
            command,
            input,
            status: outcome.status,
            exit_code: outcome.exit_code,
            error: outcome.error.clone(),
            payload: outcome.payload.clone(),
        }
    }
}
