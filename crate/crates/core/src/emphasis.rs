//! The emphasis matrix: the adjacency reweighted by structural similarity.
//!
//! 1. Count node visits of `M` random walks of `L` steps from every node.
//! 2. Keep only 1-hop entries, divide row `i` by `deg(i)` and take the log.
//! 3. Embed nodes by a rank-`d` truncated SVD, scaling `U` by `sqrt(S)`.
//! 4. Weight every edge by `exp(-||U_i - U_j||)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par;
use crate::seed::{self, STREAM_WALKS};
use crate::sparse::SparseWeightedMatrix;
use crate::svd::{self, SvdOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walk_length: usize,
    pub trials: usize,
    pub rank: usize,
    pub seed: u64,
    pub backtracking: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_length: 4,
            trials: 10,
            rank: 256,
            seed: 0,
            backtracking: false,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length == 0 || self.trials == 0 || self.rank == 0 {
            return Err(Error::invalid("walk length, trials and rank must be positive"));
        }
        Ok(())
    }
}

/// Appends the nodes visited by one walk from `start` (the start itself is not
/// recorded). A non-backtracking walk never steps straight back to the node it
/// just left and stops early when that is the only option.
pub(crate) fn walk<R: Rng>(
    graph: &Graph,
    start: usize,
    length: usize,
    backtracking: bool,
    rng: &mut R,
    visits: &mut Vec<u32>,
) {
    let mut prev: Option<u32> = None;
    let mut cur = start as u32;
    for _ in 0..length {
        let nbrs = graph.neighbors(cur as usize);
        let next = match prev {
            Some(p) if !backtracking => {
                // neighbor lists are sorted and unique, so `p` occurs once
                let choices = nbrs.len() - 1;
                if choices == 0 {
                    break;
                }
                let pos = nbrs.binary_search(&p).expect("previous node is a neighbor");
                let r = rng.random_range(0..choices);
                nbrs[if r >= pos { r + 1 } else { r }]
            }
            _ => {
                if nbrs.is_empty() {
                    break;
                }
                nbrs[rng.random_range(0..nbrs.len())]
            }
        };
        visits.push(next);
        prev = Some(cur);
        cur = next;
    }
}

/// Visit counts `W'[i][j]` over `trials` walks of `walk_length` steps from each node.
///
/// Walks from node `i` use a generator seeded by `(seed, i)`.
pub fn random_walk_counts(graph: &Graph, config: &WalkConfig) -> Result<SparseWeightedMatrix> {
    config.validate()?;
    let rows = par::map_indices(graph.num_nodes(), |i| {
        let mut rng = seed::task_rng(config.seed, &[STREAM_WALKS, i as u64]);
        let mut visits = Vec::with_capacity(config.walk_length * config.trials);
        for _ in 0..config.trials {
            walk(graph, i, config.walk_length, config.backtracking, &mut rng, &mut visits);
        }
        visits.sort_unstable();
        let mut row: Vec<(u32, f64)> = Vec::new();
        for j in visits {
            match row.last_mut() {
                Some((last, count)) if *last == j => *count += 1.0,
                _ => row.push((j, 1.0)),
            }
        }
        row
    });
    SparseWeightedMatrix::from_rows(graph.num_nodes(), rows)
}

/// Hoeffding-style bound on the 1-hop visit frequency error of `M` walks of
/// length `L`, holding with probability `1 - delta`:
/// `ceil((L-1)/k) / L * sqrt(ln(2/delta) / (2 L M))` with `k = 2` for ordinary
/// and `k = 3` for non-backtracking walks.
pub fn walk_error_bound(walk_length: usize, trials: usize, delta: f64, backtracking: bool) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} not in (0, 1)")));
    }
    if walk_length < 2 || trials == 0 {
        return Err(Error::invalid("bound needs walk length >= 2 and at least one trial"));
    }
    let l = walk_length as f64;
    let m = trials as f64;
    let divisor = if backtracking { 2 } else { 3 };
    let numerator = (walk_length - 1).div_ceil(divisor) as f64;
    Ok(numerator / l * ((2.0 / delta).ln() / (2.0 * l * m)).sqrt())
}

/// `ln(D^-1 (W' .* A))`: 1-hop entries of `W'` divided by the row node's degree,
/// then logged. Zero counts stay structural zeros.
pub fn transform_proximity(wprime: &SparseWeightedMatrix, graph: &Graph) -> Result<SparseWeightedMatrix> {
    if wprime.nrows() != graph.num_nodes() || wprime.ncols() != graph.num_nodes() {
        return Err(Error::invalid("proximity matrix does not match the graph"));
    }
    let rows = par::map_indices(graph.num_nodes(), |i| {
        let nbrs = graph.neighbors(i);
        let deg = nbrs.len() as f64;
        let (idx, vals) = wprime.row(i);
        let mut out = Vec::new();
        let (mut a, mut b) = (0, 0);
        while a < idx.len() && b < nbrs.len() {
            match idx[a].cmp(&nbrs[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    if vals[a] > 0.0 {
                        out.push((idx[a], (vals[a] / deg).ln()));
                    }
                    a += 1;
                    b += 1;
                }
            }
        }
        out
    });
    SparseWeightedMatrix::from_rows(graph.num_nodes(), rows)
}

/// Node vectors `U sqrt(S)`, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbedding {
    pub vectors: DMatrix<f64>,
    /// Rank that was asked for.
    pub requested_rank: usize,
}

impl NodeEmbedding {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// True when the rank had to be reduced.
    pub fn rank_reduced(&self) -> bool {
        self.dim() < self.requested_rank
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.vectors.row(i), self.vectors.row(j));
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }
}

/// Rank-`rank` embedding of `w`. A rank larger than the number of nonzero rows
/// or columns is reduced to that number (see [`NodeEmbedding::rank_reduced`]).
pub fn embed(w: &SparseWeightedMatrix, rank: usize, seed: u64) -> Result<NodeEmbedding> {
    if rank == 0 {
        return Err(Error::invalid("embedding rank must be positive"));
    }
    let mut nonzero_rows = 0;
    let mut nonzero_cols = vec![false; w.ncols()];
    for i in 0..w.nrows() {
        let (idx, vals) = w.row(i);
        let mut any = false;
        for (&j, &v) in idx.iter().zip(vals) {
            if v != 0.0 {
                any = true;
                nonzero_cols[j as usize] = true;
            }
        }
        nonzero_rows += any as usize;
    }
    let achievable = nonzero_rows.min(nonzero_cols.iter().filter(|&&b| b).count());
    let used = rank.min(achievable);
    if used == 0 {
        return Ok(NodeEmbedding {
            vectors: DMatrix::zeros(w.nrows(), 0),
            requested_rank: rank,
        });
    }
    let opts = SvdOptions {
        seed,
        ..SvdOptions::default()
    };
    let svd = svd::truncated_svd(w, used, opts)?;
    let mut vectors = svd.u;
    for (k, s) in svd.singular_values.iter().enumerate() {
        vectors.column_mut(k).scale_mut(s.sqrt());
    }
    Ok(NodeEmbedding {
        vectors,
        requested_rank: rank,
    })
}

/// `A*[i][j] = exp(-||U_i - U_j||)` on every edge.
pub fn build_emphasis(graph: &Graph, embedding: &NodeEmbedding) -> Result<SparseWeightedMatrix> {
    if embedding.vectors.nrows() != graph.num_nodes() {
        return Err(Error::invalid("embedding rows do not match the graph"));
    }
    // row-major copy keeps the per-edge distance loop cache friendly
    let d = embedding.dim();
    let flat: Vec<f64> = embedding.vectors.transpose().as_slice().to_vec();
    Ok(SparseWeightedMatrix::with_graph_pattern(graph, |i, j| {
        let (a, b) = (&flat[i * d..(i + 1) * d], &flat[j * d..(j + 1) * d]);
        let dist = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        (-dist).exp()
    }))
}

#[derive(Debug, Clone)]
pub struct Emphasis {
    pub matrix: SparseWeightedMatrix,
    pub embedding_rank: usize,
    pub requested_rank: usize,
}

/// Full composition: walks, transform, embedding, reweighting.
///
/// The rank is first clipped to `n - 1`.
pub fn emphasis_matrix(graph: &Graph, config: &WalkConfig) -> Result<Emphasis> {
    config.validate()?;
    let wprime = random_walk_counts(graph, config)?;
    let w = transform_proximity(&wprime, graph)?;
    let rank = config.rank.min(graph.num_nodes().saturating_sub(1)).max(1);
    let embedding = embed(&w, rank, config.seed)?;
    let matrix = build_emphasis(graph, &embedding)?;
    Ok(Emphasis {
        matrix,
        embedding_rank: embedding.dim(),
        requested_rank: config.rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(l: usize, m: usize) -> WalkConfig {
        WalkConfig {
            walk_length: l,
            trials: m,
            rank: 2,
            seed: 11,
            backtracking: false,
        }
    }

    #[test]
    fn single_edge_dead_ends() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let w = random_walk_counts(&g, &cfg(4, 3)).unwrap();
        assert_eq!(w.get(0, 1), Some(3.0));
        assert_eq!(w.get(0, 0), None);
    }

    #[test]
    fn backtracking_walk_bounces() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let mut c = cfg(4, 3);
        c.backtracking = true;
        let w = random_walk_counts(&g, &c).unwrap();
        assert_eq!(w.get(0, 1), Some(6.0));
        assert_eq!(w.get(0, 0), Some(6.0));
    }

    #[test]
    fn triangle_two_steps() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let w = random_walk_counts(&g, &cfg(2, 1)).unwrap();
        let (idx, vals) = w.row(0);
        assert_eq!(vals.iter().sum::<f64>(), 2.0);
        assert_eq!(idx, &[1, 2]);
    }

    #[test]
    fn never_backtracks() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]).unwrap();
        let mut rng = seed::task_rng(5, &[]);
        for start in 0..6 {
            for _ in 0..200 {
                let mut v = vec![start as u32];
                walk(&g, start, 12, false, &mut rng, &mut v);
                assert!(v.windows(3).all(|w| w[0] != w[2]), "{v:?}");
            }
        }
    }

    #[test]
    fn isolated_node_has_empty_row() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let w = random_walk_counts(&g, &cfg(4, 5)).unwrap();
        assert_eq!(w.row(2).0.len(), 0);
    }

    #[test]
    fn bound_values() {
        let nb = walk_error_bound(4, 10, 0.05, false).unwrap();
        let bt = walk_error_bound(4, 10, 0.05, true).unwrap();
        assert!((nb - 0.25 * (40f64.ln() / 80.0).sqrt()).abs() < 1e-15);
        assert!((nb - 0.05368).abs() < 1e-5);
        assert!((bt - 0.10737).abs() < 1e-5);
        assert!(walk_error_bound(4, 10, 0.0, false).is_err());
        assert!(walk_error_bound(4, 10, 1.0, false).is_err());
        assert!(walk_error_bound(1, 10, 0.5, false).is_err());
        for l in 2..40 {
            assert!(walk_error_bound(l, 7, 0.1, false).unwrap() <= walk_error_bound(l, 7, 0.1, true).unwrap());
        }
    }

    #[test]
    fn transform_masks_and_logs() {
        // node 0 has neighbors 1, 2, 3; node 2 is not adjacent to node 1
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let wp = SparseWeightedMatrix::from_rows(
            4,
            vec![vec![(1, 3.0), (2, 1.0)], vec![(2, 5.0), (0, 1.0)], vec![], vec![(0, 0.0)]],
        )
        .unwrap();
        let w = transform_proximity(&wp, &g).unwrap();
        assert_eq!(w.get(0, 1), Some(0.0));
        assert!((w.get(0, 2).unwrap() - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(w.get(1, 2), None);
        assert_eq!(w.get(1, 0), Some(0.0));
        assert_eq!(w.get(3, 0), None);
    }

    #[test]
    fn transform_negative_entries() {
        let g = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let wp = SparseWeightedMatrix::from_rows(5, vec![vec![(1, 1.0)], vec![], vec![], vec![], vec![]]).unwrap();
        let w = transform_proximity(&wp, &g).unwrap();
        assert!((w.get(0, 1).unwrap() - (-1.3863)).abs() < 1e-4);
    }

    #[test]
    fn identity_embedding() {
        let w = SparseWeightedMatrix::from_dense(&DMatrix::identity(2, 2));
        let e = embed(&w, 2, 0).unwrap();
        let r0 = e.vectors.row(0);
        let r1 = e.vectors.row(1);
        assert!(r0.dot(&r1).abs() < 1e-12);
        assert!((r0.norm() - 1.0).abs() < 1e-12);
        assert!((r1.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_reduces_rank() {
        let w = SparseWeightedMatrix::from_rows(3, vec![vec![(0, 1.0)], vec![(0, 2.0)], vec![]]).unwrap();
        let e = embed(&w, 3, 0).unwrap();
        assert_eq!(e.dim(), 1);
        assert!(e.rank_reduced());
    }

    #[test]
    fn similarity_weights() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let vectors = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, std::f64::consts::LN_2]);
        let e = NodeEmbedding {
            vectors,
            requested_rank: 1,
        };
        let a = build_emphasis(&g, &e).unwrap();
        assert_eq!(a.get(0, 1), Some(1.0));
        assert!((a.get(1, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!(a.is_symmetric(0.0));
    }

    #[test]
    fn pipeline_on_single_edge() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let e = emphasis_matrix(&g, &WalkConfig::default()).unwrap();
        assert_eq!(e.matrix.nnz(), 2);
        let w = e.matrix.get(0, 1).unwrap();
        assert!(w > 0.0 && w <= 1.0);
        assert_eq!(Some(w), e.matrix.get(1, 0));
        assert_eq!(e.embedding_rank, 1);
    }
}
