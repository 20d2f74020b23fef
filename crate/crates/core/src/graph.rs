//! Immutable undirected simple graph in compressed sparse row form.

use crate::error::{Error, Result};

/// Undirected, unweighted simple graph.
///
/// Both directions of every edge are stored; neighbor lists are sorted and
/// free of duplicates and self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    num_edges: usize,
}

impl Graph {
    /// Builds a graph on `n` nodes from undirected pairs.
    ///
    /// Self-loops and repeated pairs (in either orientation) are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::invalid(format!("{n} nodes exceed the u32 id space")));
        }
        let mut pairs = Vec::new();
        for (u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if u != v {
                pairs.push((u.min(v) as u32, u.max(v) as u32));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self::from_sorted_unique(n, &pairs))
    }

    /// `pairs` must be sorted, deduplicated and satisfy `u < v < n`.
    pub(crate) fn from_sorted_unique(n: usize, pairs: &[(u32, u32)]) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in pairs {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        for &(u, v) in pairs {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Graph {
            offsets,
            neighbors,
            num_edges: pairs.len(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn raw_neighbors(&self) -> &[u32] {
        &self.neighbors
    }

    /// Full scan of the structural invariants; used by tests and after ingestion
    /// in debug builds.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        let degree_sum: usize = self.degrees().sum();
        if degree_sum != 2 * self.num_edges {
            return Err(Error::invalid(format!(
                "degree sum {degree_sum} != 2 * {}",
                self.num_edges
            )));
        }
        for u in 0..n {
            let nbrs = self.neighbors(u);
            if nbrs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("neighbors of {u} not strictly sorted")));
            }
            for &v in nbrs {
                let v = v as usize;
                if v >= n {
                    return Err(Error::NodeOutOfRange { id: v, n });
                }
                if v == u {
                    return Err(Error::invalid(format!("self-loop at {u}")));
                }
                if !self.has_edge(v, u) {
                    return Err(Error::invalid(format!("edge {u}-{v} is not symmetric")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        g.validate().unwrap();
    }

    #[test]
    fn drops_duplicates_and_self_loops() {
        let g = Graph::from_edges(2, [(0, 1), (1, 0), (0, 0)]).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn rejects_out_of_range() {
        let err = Graph::from_edges(2, [(0, 2)]).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { id: 2, n: 2 }));
    }

    #[test]
    fn isolated_nodes_have_empty_rows() {
        let g = Graph::from_edges(4, [(0, 1)]).unwrap();
        assert_eq!(g.degree(3), 0);
        assert!(g.neighbors(2).is_empty());
        assert_eq!(g.degrees().sum::<usize>(), 2);
    }
}
