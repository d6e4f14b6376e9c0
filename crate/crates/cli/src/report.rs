//! Versioned JSON report written by `run` and `compare`.
//!
//! Reals use serde_json's shortest round-trip representation; non-finite
//! values become `null`, except the condition number whose singular sentinel
//! is the string `"inf"`.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub command: String,
    pub config: EffectiveConfig,
    pub dataset: DatasetSummary,
    pub condition_number: ConditionNumber,
    pub solvers: Vec<SolverEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Every option that influenced the run, defaults resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub data_path: String,
    pub solvers: Vec<String>,
    pub test_size: f64,
    pub seed: u64,
    pub reg_factor: f64,
    pub repeat: usize,
    pub qr_rank_policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    /// Feature columns, excluding the intercept.
    pub columns: usize,
    pub towns: usize,
    pub year_min: i32,
    pub year_max: i32,
    pub train_rows: usize,
    pub test_rows: usize,
}

/// Finite estimate, or `"inf"` when the design matrix is numerically singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionNumber {
    Finite(f64),
    Sentinel(Infinite),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Infinite {
    #[serde(rename = "inf")]
    Inf,
}

impl ConditionNumber {
    pub fn from_value(k: f64) -> Self {
        if k.is_finite() {
            ConditionNumber::Finite(k)
        } else {
            ConditionNumber::Sentinel(Infinite::Inf)
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            ConditionNumber::Finite(k) => *k,
            ConditionNumber::Sentinel(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCoefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub solver: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    pub runtime_ms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<NamedCoefficient>,
    /// Columns the QR solver pinned to zero as linearly dependent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dependent_columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residuals_test: Vec<f64>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn entry(&self, solver: &str) -> Option<&SolverEntry> {
        self.solvers.iter().find(|e| e.solver == solver)
    }
}
