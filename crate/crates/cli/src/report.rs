use std::collections::BTreeMap;

use neteffect::pipeline::ClassifyReport;
use neteffect::GneVerdict;
use serde::Serialize;

/// Machine-readable summary of one invocation.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub subcommand: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub threads: usize,
    pub graph: GraphSummary,
    /// Seconds per stage, plus `total`.
    pub timings: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<TestSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<AccuracySection>,
}

#[derive(Debug, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub labeled: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub priors: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct TestSection {
    pub rounds: usize,
    pub cap: u32,
    pub alpha: f64,
    pub verdict: GneVerdict,
    /// Class pairs without any relevant prior edge.
    pub insufficient_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize)]
pub struct EstimateSection {
    pub estimator: &'static str,
    pub emphasis: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    pub classes_without_priors: Vec<usize>,
    /// Row-normalized.
    pub compatibility: Vec<Vec<f64>>,
    pub row_argmax: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct AccuracySection {
    pub accuracy: f64,
    /// Labeled nodes outside the priors.
    pub evaluated: usize,
}
