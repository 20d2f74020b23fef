//! Spectral radius of symmetric sparse matrices by power iteration.

use serde::Serialize;

use crate::sparse::SparseWeightedMatrix;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached before the relative change fell below `tol`.
    pub converged: bool,
}

/// Largest absolute eigenvalue of a symmetric matrix.
///
/// Starts from the normalized all-ones vector and tracks `||A x_k||` with
/// `||x_k|| = 1`, which is non-decreasing for symmetric `A` and converges to
/// the spectral radius even when `-rho` is also an eigenvalue (bipartite
/// graphs). An all-zero matrix yields 0.
pub fn spectral_radius(matrix: &SparseWeightedMatrix, tol: f64, max_iter: usize) -> SpectralEstimate {
    assert_eq!(matrix.nrows(), matrix.ncols(), "spectral radius needs a square matrix");
    let n = matrix.nrows();
    let max_iter = max_iter.max(1);
    if n == 0 || matrix.values().iter().all(|&v| v == 0.0) {
        return SpectralEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut estimate = 0.0f64;
    for it in 1..=max_iter {
        matrix.matvec(&x, &mut y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // start vector annihilated: A is nilpotent on it
            return SpectralEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        let change = (norm - estimate).abs();
        estimate = norm;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if it > 1 && change <= tol * norm {
            return SpectralEstimate {
                value: estimate,
                iterations: it,
                converged: true,
            };
        }
    }
    SpectralEstimate {
        value: estimate,
        iterations: max_iter,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::graph::Graph;

    fn rho(m: &[f64], n: usize) -> f64 {
        let a = SparseWeightedMatrix::from_dense(&DMatrix::from_row_slice(n, n, m));
        spectral_radius(&a, DEFAULT_TOL, DEFAULT_MAX_ITER).value
    }

    #[test]
    fn identity_and_swap() {
        assert!((rho(&[1.0, 0.0, 0.0, 1.0], 2) - 1.0).abs() < 1e-12);
        assert!((rho(&[0.0, 1.0, 1.0, 0.0], 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_graph_p3() {
        // eigenvalues of the P3 adjacency are -sqrt2, 0, sqrt2
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let est = spectral_radius(&SparseWeightedMatrix::adjacency(&g), DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert!((est.value - std::f64::consts::SQRT_2).abs() < 1e-5);
        assert!(est.converged);
    }

    #[test]
    fn zero_matrix() {
        let a = SparseWeightedMatrix::from_rows(3, vec![vec![], vec![(1, 0.0)], vec![]]).unwrap();
        assert_eq!(spectral_radius(&a, 1e-6, 10).value, 0.0);
    }

    #[test]
    fn reports_non_convergence() {
        // eigenvalues 1 and 0.999: very slow separation from the all-ones start
        let a = SparseWeightedMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.999]));
        let est = spectral_radius(&a, 1e-15, 3);
        assert_eq!(est.iterations, 3);
        assert!(!est.converged);
    }

    #[test]
    fn regular_graph_degree() {
        // cycle C6 is 2-regular with spectral radius exactly 2
        let g = Graph::from_edges(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
        let est = spectral_radius(&SparseWeightedMatrix::adjacency(&g), 1e-9, 100);
        assert!((est.value - 2.0).abs() < 1e-9);
    }
}
