//! Weighted CSR matrices sharing (a subset of) a graph's sparsity pattern.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par;

/// Compressed sparse row matrix with `f64` weights.
///
/// Column indices within a row are strictly increasing. Stored entries may be
/// zero (an explicit `ln 1`, for instance); absent entries are structural zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseWeightedMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseWeightedMatrix {
    /// Builds from per-row `(column, value)` lists. Each row is sorted here;
    /// repeated columns are summed.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            for (j, v) in row {
                if j as usize >= cols {
                    return Err(Error::NodeOutOfRange {
                        id: j as usize,
                        n: cols,
                    });
                }
                if indices.len() > *offsets.last().unwrap() && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Ok(SparseWeightedMatrix {
            rows: offsets.len() - 1,
            cols,
            offsets,
            indices,
            values,
        })
    }

    /// The adjacency matrix with unit weights.
    pub fn adjacency(graph: &Graph) -> Self {
        SparseWeightedMatrix {
            rows: graph.num_nodes(),
            cols: graph.num_nodes(),
            offsets: graph.offsets().to_vec(),
            indices: graph.raw_neighbors().to_vec(),
            values: vec![1.0; graph.raw_neighbors().len()],
        }
    }

    /// The graph's pattern with one weight per stored (directed) entry, computed
    /// by `weight(i, j)`.
    pub fn with_graph_pattern<F>(graph: &Graph, weight: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let rows: Vec<Vec<f64>> = par::map_indices(graph.num_nodes(), |i| {
            graph
                .neighbors(i)
                .iter()
                .map(|&j| weight(i, j as usize))
                .collect()
        });
        SparseWeightedMatrix {
            rows: graph.num_nodes(),
            cols: graph.num_nodes(),
            offsets: graph.offsets().to_vec(),
            indices: graph.raw_neighbors().to_vec(),
            values: rows.into_iter().flatten().collect(),
        }
    }

    /// Dense square matrix to CSR, dropping exact zeros.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j as u32, m[(i, j)]))
                    .collect()
            })
            .collect();
        SparseWeightedMatrix::from_rows(m.ncols(), rows).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let span = self.offsets[i]..self.offsets[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (idx, vals) = self.row(i);
        idx.binary_search(&(j as u32)).ok().map(|k| vals[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (idx, vals) = self.row(i);
            idx.iter().zip(vals).map(move |(&j, &v)| (i, j as usize, v))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn transpose(&self) -> SparseWeightedMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            counts[j as usize + 1] += 1;
        }
        for k in 0..self.cols {
            counts[k + 1] += counts[k];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut indices = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows visited in order, so every transposed row comes out sorted
        for (i, j, v) in self.iter() {
            let slot = cursor[j];
            indices[slot] = i as u32;
            values[slot] = v;
            cursor[j] += 1;
        }
        SparseWeightedMatrix {
            rows: self.cols,
            cols: self.rows,
            offsets,
            indices,
            values,
        }
    }

    /// True when the pattern is symmetric and mirrored weights agree within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && self
                .iter()
                .all(|(i, j, v)| self.get(j, i).is_some_and(|w| (v - w).abs() <= tol))
    }

    /// `y = A x`. Each row is reduced in stored order.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        par::for_each_row_mut(y, 1, |i, out| {
            let (idx, vals) = self.row(i);
            out[0] = idx
                .iter()
                .zip(vals)
                .map(|(&j, &v)| v * x[j as usize])
                .sum();
        });
    }

    /// `Y = A X` with `X` and `Y` row-major, `width` columns each.
    pub fn mul_rows(&self, x: &[f64], width: usize, y: &mut [f64]) {
        assert_eq!(x.len(), self.cols * width);
        assert_eq!(y.len(), self.rows * width);
        par::for_each_row_mut(y, width, |i, out| {
            out.fill(0.0);
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                let src = &x[j as usize * width..(j as usize + 1) * width];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        });
    }

    /// `A X` for a dense column-major `X`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.cols);
        let k = x.ncols();
        let x_rows: Vec<f64> = x.transpose().as_slice().to_vec();
        let mut y = vec![0.0; self.rows * k];
        self.mul_rows(&x_rows, k, &mut y);
        DMatrix::from_row_slice(self.rows, k, &y)
    }

    /// Writes `i j weight` triples.
    pub fn write_triples<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, j, v) in self.iter() {
            writeln!(out, "{i} {j} {v}")?;
        }
        Ok(())
    }
}
