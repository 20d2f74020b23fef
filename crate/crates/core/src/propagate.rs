//! Linearized belief propagation with a residual compatibility matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::beliefs::{argmax, BeliefMatrix, CompatibilityForm, CompatibilityMatrix};
use crate::error::{Error, Result};
use crate::par;
use crate::sparse::SparseWeightedMatrix;
use crate::spectral::{self, SpectralEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// `f = f_safety / rho(A)`.
    pub f_safety: f64,
    /// Stop once the entrywise L1 change between iterates is at most this.
    pub l1_threshold: f64,
    pub max_iter: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            f_safety: 0.9,
            l1_threshold: 1.0,
            max_iter: 200,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_safety > 0.0 && self.f_safety < 1.0) {
            return Err(Error::invalid("f_safety must be in (0, 1)"));
        }
        if self.l1_threshold.is_nan() || self.l1_threshold <= 0.0 {
            return Err(Error::invalid("l1_threshold must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    /// Plain form.
    pub beliefs: BeliefMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Scaling actually applied to the matrix.
    pub f: f64,
    pub rho: SpectralEstimate,
    /// L1 change after every iteration.
    pub deltas: Vec<f64>,
}

fn check_shapes(a: &SparseWeightedMatrix, h: &CompatibilityMatrix, ehat: &BeliefMatrix) -> Result<()> {
    if h.form != CompatibilityForm::Residual {
        return Err(Error::invalid("propagation needs a residual compatibility matrix"));
    }
    if !ehat.is_centered() {
        return Err(Error::invalid("propagation needs residual (centered) beliefs"));
    }
    if h.num_classes() != ehat.num_classes() {
        return Err(Error::invalid("compatibility and beliefs disagree on class count"));
    }
    if a.nrows() != ehat.num_nodes() || a.ncols() != ehat.num_nodes() {
        return Err(Error::invalid("matrix and beliefs disagree on node count"));
    }
    Ok(())
}

/// Iterates `B <- E + f A B H` from `B = 0` with `f = f_safety / rho(A)` and
/// returns `B + 1/c`.
pub fn propagate(
    a: &SparseWeightedMatrix,
    h: &CompatibilityMatrix,
    ehat: &BeliefMatrix,
    config: &PropagationConfig,
) -> Result<Propagation> {
    config.validate()?;
    check_shapes(a, h, ehat)?;
    let rho = spectral::spectral_radius(a, spectral::DEFAULT_TOL, spectral::DEFAULT_MAX_ITER);
    if rho.value == 0.0 {
        return Ok(Propagation {
            beliefs: ehat.to_centered(false),
            iterations: 0,
            converged: true,
            f: 0.0,
            rho,
            deltas: Vec::new(),
        });
    }
    let mut out = propagate_with_scale(a, h, ehat, config.f_safety / rho.value, config.l1_threshold, config.max_iter)?;
    out.rho = rho;
    Ok(out)
}

/// The propagation loop with an explicit scale `f` (no stability guard).
///
/// Stops early, unconverged, if the iterate stops being finite.
pub fn propagate_with_scale(
    a: &SparseWeightedMatrix,
    h: &CompatibilityMatrix,
    ehat: &BeliefMatrix,
    f: f64,
    l1_threshold: f64,
    max_iter: usize,
) -> Result<Propagation> {
    check_shapes(a, h, ehat)?;
    let (n, c) = (ehat.num_nodes(), ehat.num_classes());
    let e = ehat.values();
    // row-major copy of f * H
    let fh: Vec<f64> = (0..c * c).map(|k| f * h.values[(k / c, k % c)]).collect();
    let mut cur = vec![0.0; n * c];
    let mut bh = vec![0.0; n * c];
    let mut next = vec![0.0; n * c];
    let mut deltas = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        // (B f H) row by row, then A times that
        par::for_each_row_mut(&mut bh, c, |i, out| {
            let b = &cur[i * c..(i + 1) * c];
            for (v, o) in out.iter_mut().enumerate() {
                *o = (0..c).map(|u| b[u] * fh[u * c + v]).sum();
            }
        });
        a.mul_rows(&bh, c, &mut next);
        for (x, ei) in next.iter_mut().zip(e) {
            *x += ei;
        }
        let delta: f64 = next.iter().zip(&cur).map(|(x, y)| (x - y).abs()).sum();
        std::mem::swap(&mut cur, &mut next);
        deltas.push(delta);
        if !delta.is_finite() {
            break;
        }
        if delta <= l1_threshold {
            converged = true;
            break;
        }
    }
    let shift = 1.0 / c as f64;
    cur.iter_mut().for_each(|x| *x += shift);
    Ok(Propagation {
        beliefs: BeliefMatrix::from_rows(n, c, cur, false)?,
        iterations: deltas.len(),
        converged,
        f,
        rho: SpectralEstimate {
            value: f64::NAN,
            iterations: 0,
            converged: false,
        },
        deltas,
    })
}

/// Per-node argmax; ties go to the lowest class id.
pub fn predict(beliefs: &BeliefMatrix) -> Vec<usize> {
    (0..beliefs.num_nodes())
        .map(|i| argmax(beliefs.row(i).iter().copied()))
        .collect()
}

/// Residual beliefs at the exact fixed point, by a dense solve of
/// `(I - f (H^T kron A)) vec(B) = vec(E)`. Only for small instances.
pub fn dense_fixed_point(a: &SparseWeightedMatrix, h: &CompatibilityMatrix, ehat: &BeliefMatrix, f: f64) -> Result<DMatrix<f64>> {
    check_shapes(a, h, ehat)?;
    let (n, c) = (ehat.num_nodes(), ehat.num_classes());
    let system = DMatrix::identity(n * c, n * c) - (h.values.transpose().kronecker(&a.to_dense())) * f;
    let rhs = nalgebra::DVector::from_fn(n * c, |k, _| ehat.row(k % n)[k / n]);
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("fixed-point system is singular".into()))?;
    Ok(DMatrix::from_column_slice(n, c, x.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::initial_beliefs;
    use crate::graph::Graph;
    use crate::labels::{LabelSet, PriorSet};

    fn setup() -> (Graph, LabelSet, PriorSet) {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]).unwrap();
        let l = LabelSet::from_classes(&[0, 0, 0, 1, 1, 1]).unwrap();
        let p = PriorSet::from_nodes(&l, [0, 5]).unwrap();
        (g, l, p)
    }

    #[test]
    fn zero_compatibility_returns_priors() {
        let (g, l, p) = setup();
        let e = initial_beliefs(&p, &l, true);
        let h = CompatibilityMatrix::residual(DMatrix::zeros(2, 2));
        let out = propagate(&SparseWeightedMatrix::adjacency(&g), &h, &e, &PropagationConfig::default()).unwrap();
        // the first step lands on the fixed point; the second confirms it
        assert_eq!(out.iterations, 2);
        assert_eq!(out.deltas[1], 0.0);
        assert!(out.converged);
        assert_eq!(out.beliefs, initial_beliefs(&p, &l, false));
    }

    #[test]
    fn edgeless_graph() {
        let l = LabelSet::from_classes(&[0, 1, 1]).unwrap();
        let p = PriorSet::from_nodes(&l, [0, 1]).unwrap();
        let e = initial_beliefs(&p, &l, true);
        let a = SparseWeightedMatrix::from_rows(3, vec![vec![]; 3]).unwrap();
        let out = propagate(&a, &CompatibilityMatrix::centered_identity(2), &e, &PropagationConfig::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.beliefs, initial_beliefs(&p, &l, false));
    }

    #[test]
    fn matches_dense_solve() {
        let (g, l, p) = setup();
        let e = initial_beliefs(&p, &l, true);
        let a = SparseWeightedMatrix::adjacency(&g);
        let h = CompatibilityMatrix::residual(DMatrix::from_row_slice(2, 2, &[0.4, -0.4, -0.3, 0.3]));
        let cfg = PropagationConfig {
            l1_threshold: 1e-13,
            max_iter: 10_000,
            ..Default::default()
        };
        let out = propagate(&a, &h, &e, &cfg).unwrap();
        assert!(out.converged);
        let exact = dense_fixed_point(&a, &h, &e, out.f).unwrap();
        for i in 0..6 {
            for k in 0..2 {
                assert!((out.beliefs.row(i)[k] - 0.5 - exact[(i, k)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn homophily_spreads_clique_labels() {
        let (g, l, p) = setup();
        let e = initial_beliefs(&p, &l, true);
        let out = propagate(
            &SparseWeightedMatrix::adjacency(&g),
            &CompatibilityMatrix::centered_identity(2),
            &e,
            &PropagationConfig::default(),
        )
        .unwrap();
        assert_eq!(predict(&out.beliefs), vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn predict_ties_go_low() {
        let b = BeliefMatrix::from_rows(3, 2, vec![0.7, 0.3, 0.5, 0.5, 0.2, 0.8], false).unwrap();
        assert_eq!(predict(&b), vec![0, 0, 1]);
    }

    #[test]
    fn rejects_bad_config_and_forms() {
        let (g, l, p) = setup();
        let a = SparseWeightedMatrix::adjacency(&g);
        let e = initial_beliefs(&p, &l, true);
        let h = CompatibilityMatrix::centered_identity(2);
        for bad in [
            PropagationConfig { f_safety: 1.0, ..Default::default() },
            PropagationConfig { l1_threshold: 0.0, ..Default::default() },
            PropagationConfig { max_iter: 0, ..Default::default() },
        ] {
            assert!(propagate(&a, &h, &e, &bad).is_err());
        }
        let plain = initial_beliefs(&p, &l, false);
        assert!(propagate(&a, &h, &plain, &PropagationConfig::default()).is_err());
        assert!(propagate(&a, &h.to_display(), &e, &PropagationConfig::default()).is_err());
    }

    #[test]
    fn divergent_scale_grows() {
        let (g, l, p) = setup();
        let a = SparseWeightedMatrix::adjacency(&g);
        let e = initial_beliefs(&p, &l, true);
        let h = CompatibilityMatrix::residual(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let rho = spectral::spectral_radius(&a, 1e-9, 1000).value;
        let out = propagate_with_scale(&a, &h, &e, 2.0 / rho, 1e-12, 30).unwrap();
        assert!(!out.converged);
        assert!(out.deltas[29] > out.deltas[5]);
    }
}
