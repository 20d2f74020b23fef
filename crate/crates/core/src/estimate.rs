//! Compatibility matrix estimation.
//!
//! The residual compatibility matrix `H` is fitted so that propagating the
//! prior beliefs one hop reproduces them: `E ~ (A E) H` on the prior rows.
//! Vectorized this is a regression with design `I_c ⊗ (A E)`; because the
//! design is block diagonal it splits into `c` ridge problems that share the
//! feature matrix `Z = (A E)[P]` and differ only in the target column. Each
//! problem picks its regularization strength by closed-form leave-one-out
//! cross-validation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::beliefs::{BeliefMatrix, CompatibilityMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::labels::{LabelSet, PriorSet};
use crate::par;
use crate::sparse::SparseWeightedMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub alphas: Vec<f64>,
}

impl Default for RidgeConfig {
    /// 13 log-spaced strengths from 1e-3 to 1e3.
    fn default() -> Self {
        RidgeConfig {
            alphas: (0..13).map(|k| 10f64.powf(-3.0 + 0.5 * k as f64)).collect(),
        }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::invalid("ridge grid is empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::invalid(format!("ridge strength {a} must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub alpha: f64,
    pub coefficients: DVector<f64>,
    /// Mean squared leave-one-out residual at `alpha`.
    pub loo_mse: f64,
}

/// Spectral factorization of `X^T X` reused across strengths and targets.
struct Gram {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// `X V`
    projected: DMatrix<f64>,
}

impl Gram {
    fn new(x: &DMatrix<f64>) -> Self {
        let eig = (x.transpose() * x).symmetric_eigen();
        let eigenvalues = eig.eigenvalues.map(|l| l.max(0.0));
        let projected = x * &eig.eigenvectors;
        Gram {
            eigenvalues,
            eigenvectors: eig.eigenvectors,
            projected,
        }
    }

    fn shrink(&self, alpha: f64) -> DVector<f64> {
        self.eigenvalues.map(|l| 1.0 / (l + alpha))
    }

    fn coefficients(&self, y: &DVector<f64>, alpha: f64) -> DVector<f64> {
        let py = self.projected.transpose() * y;
        &self.eigenvectors * py.component_mul(&self.shrink(alpha))
    }

    /// Closed-form leave-one-out residuals `e_i / (1 - h_ii)`.
    fn loo_residuals(&self, y: &DVector<f64>, alpha: f64) -> DVector<f64> {
        let shrink = self.shrink(alpha);
        let py = self.projected.transpose() * y;
        let fitted = &self.projected * py.component_mul(&shrink);
        DVector::from_iterator(
            y.len(),
            (0..y.len()).map(|i| {
                let row = self.projected.row(i);
                let h: f64 = row.iter().zip(shrink.iter()).map(|(p, s)| p * p * s).sum();
                (y[i] - fitted[i]) / (1.0 - h).max(f64::EPSILON)
            }),
        )
    }

    fn select(&self, y: &DVector<f64>, grid: &[f64]) -> RidgeFit {
        let mut best: Option<(f64, f64)> = None;
        for &alpha in grid {
            let r = self.loo_residuals(y, alpha);
            let mse = r.norm_squared() / r.len() as f64;
            if best.is_none_or(|(_, m)| mse < m) {
                best = Some((alpha, mse));
            }
        }
        let (alpha, loo_mse) = best.expect("grid is nonempty");
        RidgeFit {
            alpha,
            coefficients: self.coefficients(y, alpha),
            loo_mse,
        }
    }
}

fn check_regression(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::invalid("features and targets disagree on sample count"));
    }
    if x.nrows() < 2 {
        return Err(Error::invalid("leave-one-out needs at least 2 samples"));
    }
    Ok(())
}

/// Ridge coefficients `(X^T X + alpha I)^-1 X^T y` (no intercept).
pub fn ridge_fit(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64) -> DVector<f64> {
    Gram::new(x).coefficients(y, alpha)
}

/// Leave-one-out residuals of ridge regression without refitting.
pub fn loo_residuals(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    check_regression(x, y)?;
    Ok(Gram::new(x).loo_residuals(y, alpha))
}

/// Picks the grid strength with the smallest mean squared LOO residual
/// (first one on ties) and refits on all samples.
pub fn loocv_select_alpha(x: &DMatrix<f64>, y: &DVector<f64>, grid: &[f64]) -> Result<RidgeFit> {
    check_regression(x, y)?;
    RidgeConfig {
        alphas: grid.to_vec(),
    }
    .validate()?;
    Ok(Gram::new(x).select(y, grid))
}

#[derive(Debug, Clone)]
pub struct CompatibilityEstimate {
    /// Residual form.
    pub matrix: CompatibilityMatrix,
    /// Selected strength for every target class (column of `H`).
    pub alphas: Vec<f64>,
    /// Classes without any prior node; their entries come from shrinkage alone.
    pub classes_without_priors: Vec<usize>,
}

/// `Z = A E`, row-major `n x c`.
pub fn neighbor_sums(a: &SparseWeightedMatrix, ehat: &BeliefMatrix) -> Vec<f64> {
    let c = ehat.num_classes();
    let mut z = vec![0.0; a.nrows() * c];
    a.mul_rows(ehat.values(), c, &mut z);
    z
}

/// Estimates the residual compatibility matrix from centered initial beliefs.
///
/// `a` may be the plain adjacency or the emphasis matrix.
pub fn estimate_compatibility(
    a: &SparseWeightedMatrix,
    ehat: &BeliefMatrix,
    priors: &PriorSet,
    config: &RidgeConfig,
) -> Result<CompatibilityEstimate> {
    config.validate()?;
    if !ehat.is_centered() {
        return Err(Error::invalid("estimation needs residual (centered) beliefs"));
    }
    let (n, c) = (ehat.num_nodes(), ehat.num_classes());
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::invalid("matrix and beliefs disagree on node count"));
    }
    if priors.len() < 2 {
        return Err(Error::invalid("estimation needs at least 2 prior nodes"));
    }
    let z = neighbor_sums(a, ehat);
    let rows = priors.nodes();
    let features = DMatrix::from_fn(rows.len(), c, |r, k| z[rows[r] * c + k]);
    let targets = DMatrix::from_fn(rows.len(), c, |r, k| ehat.row(rows[r])[k]);
    let gram = Gram::new(&features);
    let fits = par::map_indices(c, |u| gram.select(&targets.column(u).into_owned(), &config.alphas));

    let mut h = DMatrix::zeros(c, c);
    for (u, fit) in fits.iter().enumerate() {
        h.set_column(u, &fit.coefficients);
    }
    let classes_without_priors = (0..c)
        .filter(|&k| !rows.iter().any(|&i| ehat.row(i)[k] > 0.0))
        .collect();
    Ok(CompatibilityEstimate {
        matrix: CompatibilityMatrix::residual(h),
        alphas: fits.iter().map(|f| f.alpha).collect(),
        classes_without_priors,
    })
}

/// Row-normalized counts of class pairs over edges between prior nodes.
/// Each edge is counted from both endpoints; empty rows become uniform.
pub fn edge_counting_baseline(graph: &Graph, priors: &PriorSet, labels: &LabelSet) -> CompatibilityMatrix {
    let c = labels.num_classes();
    let mut counts = DMatrix::zeros(c, c);
    for &u in priors.nodes() {
        let cu = labels.get(u).expect("priors are labeled");
        for &v in graph.neighbors(u) {
            if priors.contains(v as usize) {
                counts[(cu, labels.get(v as usize).expect("priors are labeled"))] += 1.0;
            }
        }
    }
    for mut row in counts.row_iter_mut() {
        let s: f64 = row.sum();
        if s > 0.0 {
            row /= s;
        } else {
            row.fill(1.0 / c as f64);
        }
    }
    CompatibilityMatrix::display(counts)
}
