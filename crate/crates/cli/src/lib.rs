//! The `abr` command line and HTTP service.

pub mod cli;
pub mod ops;
pub mod service;

use serde::{Deserialize, Serialize};

pub use cli::run_cli;
pub use ops::{ErrorCode, OpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobDiagnostic {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Machine-readable outcome of one command, printed with `--json`.
/// An error always carries at least one diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub status: JobStatus,
    /// Files written by the command.
    pub payload: Vec<String>,
    pub diagnostics: Vec<JobDiagnostic>,
    /// Non-fatal notes such as skipped LOD targets.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub timing: Timing,
    /// Small inline results, e.g. palette swatches or asset records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

impl JobResult {
    pub fn failed(e: &OpError, elapsed_ms: f64) -> Self {
        Self {
            status: JobStatus::Error,
            payload: Vec::new(),
            diagnostics: vec![JobDiagnostic {
                code: e.code,
                message: e.message.clone(),
                details: e.details.clone(),
            }],
            warnings: Vec::new(),
            timing: Timing { elapsed_ms },
            data: None,
        }
    }
}
