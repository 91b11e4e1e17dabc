//! The JSON report written by `compare`, and its schema.

use serde::{Deserialize, Serialize};

use crate::em::{EmTrace, RestartSummary};
use crate::error::{Error, Result};
use crate::microdiff::DiffReport;
use crate::mstep::FitResult;
use crate::testing::TestReport;

pub const REPORT_VERSION: &str = "1.0";

/// JSON Schema (draft 2020-12) every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    #[serde(rename = "L")]
    pub basis_size: usize,
    pub lambda: f64,
    pub df: f64,
    pub aicc: f64,
    pub loglik: f64,
    /// Row-major `L²` coefficients.
    pub theta: Vec<f64>,
    pub ridge_flagged: bool,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        FitSummary {
            basis_size: f.graphon.size(),
            lambda: f.lambda,
            df: f.df,
            aicc: f.aicc,
            loglik: f.loglik,
            theta: f.graphon.theta().to_vec(),
            ridge_flagged: f.ridge_flagged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionPair {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmSummary {
    pub selected_restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub trace: EmTrace,
}

/// Wall-clock durations in seconds. Restart tests run inside the fit phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub fit_and_test: f64,
    pub diff: Option<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: serde_json::Value,
    pub fit: FitSummary,
    pub positions: PositionPair,
    pub test: TestReport,
    pub em: EmSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff: Option<DiffReport>,
    /// Only filled when timing was requested, so that reports of equal runs
    /// stay identical.
    pub timings: Option<Timings>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Check a JSON document against [`REPORT_SCHEMA`].
pub fn validate_report(doc: &serde_json::Value) -> Result<()> {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA)?;
    let validator = jsonschema::validator_for(&schema)
        .map_err(|e| Error::Config(format!("invalid report schema: {e}")))?;
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::input_nl(format!("report violates schema: {}", errors.join("; "))))
    }
}
