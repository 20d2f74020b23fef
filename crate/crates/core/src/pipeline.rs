//! End-to-end classification: matrix, compatibility estimate, propagation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::beliefs::{initial_beliefs, BeliefMatrix, CompatibilityMatrix};
use crate::emphasis::{emphasis_matrix, WalkConfig};
use crate::error::{Error, Result};
use crate::estimate::{edge_counting_baseline, estimate_compatibility, RidgeConfig};
use crate::graph::Graph;
use crate::labels::{LabelSet, PriorSet};
use crate::propagate::{predict, propagate, PropagationConfig};
use crate::sparse::SparseWeightedMatrix;

/// Which compatibility matrix and which propagation matrix to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Ridge estimate on the emphasis matrix, propagation on the emphasis matrix.
    #[serde(rename = "neteffect")]
    NetEffect,
    /// Centered identity (pure homophily) on the emphasis matrix.
    #[serde(rename = "neteffect_hom")]
    NetEffectHom,
    /// Edge counting between priors, propagation on the emphasis matrix.
    #[serde(rename = "neteffect_ec")]
    NetEffectEc,
    /// Ridge estimate and propagation on the plain adjacency.
    #[serde(rename = "neteffect_a")]
    NetEffectA,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::NetEffect, Mode::NetEffectHom, Mode::NetEffectEc, Mode::NetEffectA];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NetEffect => "neteffect",
            Mode::NetEffectHom => "neteffect_hom",
            Mode::NetEffectEc => "neteffect_ec",
            Mode::NetEffectA => "neteffect_a",
        }
    }

    fn uses_emphasis(self) -> bool {
        self != Mode::NetEffectA
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neteffect" => Ok(Mode::NetEffect),
            "neteffect_hom" | "hom" => Ok(Mode::NetEffectHom),
            "neteffect_ec" | "ec" => Ok(Mode::NetEffectEc),
            "neteffect_a" | "a" => Ok(Mode::NetEffectA),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub mode: Mode,
    /// When false the emphasis matrix is replaced by the plain adjacency.
    pub emphasis: bool,
    /// Row-normalize estimated compatibilities before propagating them.
    pub normalize_compatibility: bool,
    pub walk: WalkConfig,
    pub ridge: RidgeConfig,
    pub propagation: PropagationConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            mode: Mode::NetEffect,
            emphasis: true,
            normalize_compatibility: true,
            walk: WalkConfig::default(),
            ridge: RidgeConfig::default(),
            propagation: PropagationConfig::default(),
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimes {
    pub emphasis: f64,
    pub estimate: f64,
    pub propagate: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub mode: Mode,
    pub emphasis: bool,
    pub iterations: usize,
    pub converged: bool,
    pub f: f64,
    pub rho: f64,
    pub rho_iterations: usize,
    pub rho_converged: bool,
    /// Ridge strength per class, for the estimating modes.
    pub alphas: Option<Vec<f64>>,
    pub classes_without_priors: Vec<usize>,
    pub embedding_rank: Option<usize>,
    /// Display form, row by row.
    pub compatibility: Vec<Vec<f64>>,
    pub timings: StageTimes,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub predictions: Vec<usize>,
    /// Plain form.
    pub beliefs: BeliefMatrix,
    /// Residual form, as propagated.
    pub compatibility: CompatibilityMatrix,
    pub report: ClassifyReport,
}

/// The propagation matrix: emphasis weights or the plain adjacency.
pub struct PropagationMatrix {
    pub matrix: SparseWeightedMatrix,
    pub embedding_rank: Option<usize>,
}

pub fn propagation_matrix(graph: &Graph, walk: &WalkConfig, use_emphasis: bool) -> Result<PropagationMatrix> {
    if use_emphasis {
        let e = emphasis_matrix(graph, walk)?;
        Ok(PropagationMatrix {
            matrix: e.matrix,
            embedding_rank: Some(e.embedding_rank),
        })
    } else {
        Ok(PropagationMatrix {
            matrix: SparseWeightedMatrix::adjacency(graph),
            embedding_rank: None,
        })
    }
}

fn to_rows(h: &CompatibilityMatrix) -> Vec<Vec<f64>> {
    h.values.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn classify(graph: &Graph, labels: &LabelSet, priors: &PriorSet, config: &ClassifyConfig) -> Result<Classification> {
    if labels.num_nodes() != graph.num_nodes() {
        return Err(Error::invalid("labels and graph disagree on node count"));
    }
    config.propagation.validate()?;
    config.ridge.validate()?;
    let start = Instant::now();
    let mut timings = StageTimes::default();

    let t = Instant::now();
    let pm = propagation_matrix(graph, &config.walk, config.emphasis && config.mode.uses_emphasis())?;
    timings.emphasis = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let c = labels.num_classes();
    let ehat = initial_beliefs(priors, labels, true);
    let (h, alphas, classes_without_priors) = match config.mode {
        Mode::NetEffect | Mode::NetEffectA => {
            let est = estimate_compatibility(&pm.matrix, &ehat, priors, &config.ridge)?;
            // The raw fit scales inversely with the matrix weights, so its
            // spectral radius is unbounded; the row-normalized form has
            // rho < 1 after centering, which f = f_safety / rho(A) relies on.
            let h = if config.normalize_compatibility {
                est.matrix.to_display().to_residual()
            } else {
                est.matrix
            };
            (h, Some(est.alphas), est.classes_without_priors)
        }
        Mode::NetEffectEc => (edge_counting_baseline(graph, priors, labels).to_residual(), None, Vec::new()),
        Mode::NetEffectHom => (CompatibilityMatrix::centered_identity(c), None, Vec::new()),
    };
    timings.estimate = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let prop = propagate(&pm.matrix, &h, &ehat, &config.propagation)?;
    let predictions = predict(&prop.beliefs);
    timings.propagate = t.elapsed().as_secs_f64();
    timings.total = start.elapsed().as_secs_f64();

    let report = ClassifyReport {
        mode: config.mode,
        emphasis: pm.embedding_rank.is_some(),
        iterations: prop.iterations,
        converged: prop.converged,
        f: prop.f,
        rho: prop.rho.value,
        rho_iterations: prop.rho.iterations,
        rho_converged: prop.rho.converged,
        alphas,
        classes_without_priors,
        embedding_rank: pm.embedding_rank,
        compatibility: to_rows(&h.to_display()),
        timings,
    };
    Ok(Classification {
        predictions,
        beliefs: prop.beliefs,
        compatibility: h,
        report,
    })
}
