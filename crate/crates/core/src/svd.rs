//! Rank-`d` truncated SVD of a sparse matrix.
//!
//! Small problems (target rank plus oversampling covering the smaller
//! dimension) use a dense decomposition. Larger ones use a randomized range
//! finder with subspace iterations: sample `Y = A Omega`, orthonormalize,
//! alternate `A^T Q` / `A Q` a few times, then decompose the small projected
//! matrix exactly.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;
use crate::sparse::SparseWeightedMatrix;

#[derive(Debug, Clone, Copy)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            power_iters: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `rows x d`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `cols x d`, orthonormal columns.
    pub v: DMatrix<f64>,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Thin QR by CholeskyQR2: two passes of `R = chol(M^T M)`, `Q = M R^-1`.
/// Much faster than Householder for tall, narrow blocks; falls back to
/// Householder when the Gram matrix is not numerically positive definite.
fn thin_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    fn pass(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let r = (m.transpose() * m).cholesky()?.l().transpose();
        let r_inv = r.solve_upper_triangular(&DMatrix::identity(r.nrows(), r.ncols()))?;
        let q = m * r_inv;
        q.iter().all(|x| x.is_finite()).then_some((q, r))
    }
    let cholesky_qr2 = || {
        let (q1, r1) = pass(m)?;
        let (q, r2) = pass(&q1)?;
        let k = q.ncols();
        let drift = (q.transpose() * &q - DMatrix::<f64>::identity(k, k)).amax();
        (drift < 1e-10).then(|| (q, r2 * r1))
    };
    cholesky_qr2().unwrap_or_else(|| {
        let qr = m.clone().qr();
        (qr.q(), qr.r())
    })
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    thin_qr(&m).0
}

fn dense_svd(a: &DMatrix<f64>, rank: usize) -> Result<TruncatedSvd> {
    let svd = a.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("dense SVD did not return vectors".into())),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    order.truncate(rank);
    Ok(TruncatedSvd {
        u: u.select_columns(&order),
        singular_values: order.iter().map(|&k| svd.singular_values[k]).collect(),
        v: vt.select_rows(&order).transpose(),
    })
}

/// Rank-`rank` truncated SVD. `rank` must not exceed the smaller dimension.
pub fn truncated_svd(a: &SparseWeightedMatrix, rank: usize, opts: SvdOptions) -> Result<TruncatedSvd> {
    let (m, n) = (a.nrows(), a.ncols());
    let min_dim = m.min(n);
    if rank == 0 || rank > min_dim {
        return Err(Error::invalid(format!(
            "SVD rank {rank} outside 1..={min_dim}"
        )));
    }
    let k = rank + opts.oversample;
    if k >= min_dim {
        return dense_svd(&a.to_dense(), rank);
    }

    let at = a.transpose();
    let mut rng = seed::task_rng(opts.seed, &[seed::STREAM_SVD]);
    let omega = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(a.mul_dense(&omega));
    for _ in 0..opts.power_iters {
        let z = orthonormalize(at.mul_dense(&q));
        q = orthonormalize(a.mul_dense(&z));
    }
    // B^T = A^T Q (n x k); B^T = Q2 R; R = Ur S Vr^T  =>  A ~ (Q Vr) S (Q2 Ur)^T
    let bt = at.mul_dense(&q);
    let (q2, r) = thin_qr(&bt);
    let small = dense_svd(&r, rank)?;
    let u = &q * &small.v;
    let v = &q2 * &small.u;
    if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numerical("randomized SVD produced non-finite vectors".into()));
    }
    Ok(TruncatedSvd {
        u,
        singular_values: small.singular_values,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse_random(n: usize, density: f64, seed: u64) -> SparseWeightedMatrix {
        use rand::Rng;
        let mut rng = seed::task_rng(seed, &[]);
        let d = DMatrix::from_fn(n, n, |_, _| {
            if rng.random::<f64>() < density {
                rng.random_range(-2.0..2.0)
            } else {
                0.0
            }
        });
        SparseWeightedMatrix::from_dense(&d)
    }

    #[test]
    fn full_rank_reconstructs() {
        let a = sparse_random(12, 0.4, 1);
        let s = truncated_svd(&a, 12, SvdOptions::default()).unwrap();
        assert!((s.reconstruct() - a.to_dense()).norm() < 1e-8);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn randomized_matches_dense_on_low_rank_input() {
        // exact rank 5 matrix, 200 x 200: the randomized path must recover it
        let n = 200;
        let mut rng = seed::task_rng(9, &[]);
        let left: DMatrix<f64> = DMatrix::from_fn(n, 5, |_, _| StandardNormal.sample(&mut rng));
        let right: DMatrix<f64> = DMatrix::from_fn(5, n, |_, _| StandardNormal.sample(&mut rng));
        let dense = left * right;
        let a = SparseWeightedMatrix::from_dense(&dense);
        let s = truncated_svd(&a, 5, SvdOptions::default()).unwrap();
        let reference = dense.clone().svd(false, false).singular_values;
        let mut reference: Vec<f64> = reference.iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        for k in 0..5 {
            assert!((s.singular_values[k] - reference[k]).abs() < 1e-8 * reference[0]);
        }
        assert!((s.reconstruct() - dense).norm() < 1e-8 * reference[0]);
    }

    #[test]
    fn randomized_top_values_close_on_sparse_input() {
        let a = sparse_random(300, 0.05, 4);
        let s = truncated_svd(&a, 8, SvdOptions::default()).unwrap();
        let mut reference: Vec<f64> = a.to_dense().svd(false, false).singular_values.iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        // subspace iteration gets the leading values to within a few percent
        for (got, want) in s.singular_values.iter().zip(&reference).take(3) {
            assert!((got - want).abs() < 0.05 * want);
        }
        let utu = s.u.transpose() * &s.u;
        assert!((utu - DMatrix::identity(8, 8)).norm() < 1e-10);
    }

    #[test]
    fn thin_qr_factors() {
        let mut rng = seed::task_rng(3, &[]);
        let m: DMatrix<f64> = DMatrix::from_fn(50, 6, |_, _| StandardNormal.sample(&mut rng));
        let (q, r) = thin_qr(&m);
        assert!((&q * &r - &m).amax() < 1e-10);
        assert!((q.transpose() * &q - DMatrix::identity(6, 6)).amax() < 1e-12);
        // rank deficient input takes the Householder path
        let mut d = m.clone();
        d.set_column(5, &m.column(0));
        let (q, r) = thin_qr(&d);
        assert!((&q * &r - &d).amax() < 1e-10);
    }

    #[test]
    fn rank_out_of_range() {
        let a = sparse_random(4, 0.5, 2);
        assert!(truncated_svd(&a, 0, SvdOptions::default()).is_err());
        assert!(truncated_svd(&a, 5, SvdOptions::default()).is_err());
    }
}
