//! JSON schemas for generated metadata and run reports.

use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct MetaCone {
    pub angle: f64,
    pub basis: Vec<f64>,
}

/// Sidecar metadata for a generated dataset: the geometry that produced it.
#[derive(Debug, Serialize, Deserialize)]
pub struct GenerateMeta {
    pub f: usize,
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub lambdas: Vec<f64>,
    pub mixing: Vec<f64>,
    pub project: bool,
    pub seed: u64,
    pub delta: f64,
    pub cones: Vec<MetaCone>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FactorizeReport {
    pub solver: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    pub k: usize,
    pub iterations: usize,
    pub relative_error: f64,
    pub wall_clock_s: f64,
    /// Relative error at initialization and after each sweep (a single
    /// entry for the non-iterative solver).
    pub trace: Vec<f64>,
    /// Leading singular value per cluster (clustered rank-one solver only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_sigmas: Option<Vec<f64>>,
    /// Columns per cluster (clustered rank-one solver only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub solver: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    pub n: usize,
    pub run: usize,
    pub relative_error: f64,
    pub wall_clock_s: f64,
    /// The clustered rank-one error on the same dataset.
    pub target_error: f64,
    /// Seconds until the solver first matched the target, if it ever did.
    pub time_to_target_s: Option<f64>,
    pub reached_target: bool,
    pub iterations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// Echo of the sweep configuration.
    pub config: String,
    pub rows: Vec<BenchmarkRow>,
}
