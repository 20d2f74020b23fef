//! Classification accuracy and homophily statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::labels::{LabelSet, PriorSet};

/// Labeled nodes outside the prior set.
pub fn held_out(labels: &LabelSet, priors: &PriorSet) -> Vec<usize> {
    labels
        .iter_labeled()
        .map(|(i, _)| i)
        .filter(|&i| !priors.contains(i))
        .collect()
}

/// Fraction of `eval` nodes whose prediction matches the truth.
pub fn accuracy(predictions: &[usize], truth: &LabelSet, eval: &[usize]) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::invalid("accuracy over an empty node set"));
    }
    if predictions.len() != truth.num_nodes() {
        return Err(Error::invalid("one prediction per node required"));
    }
    let mut hits = 0usize;
    for &i in eval {
        let t = truth
            .get(i)
            .ok_or_else(|| Error::Labels(format!("evaluation node {i} is unlabeled")))?;
        hits += usize::from(predictions[i] == t);
    }
    Ok(hits as f64 / eval.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeHomophily {
    pub ratio: f64,
    pub counted: usize,
    /// Edges with an unlabeled endpoint.
    pub skipped: usize,
}

/// Share of edges (with both endpoints labeled) that join same-class nodes.
pub fn edge_homophily(graph: &Graph, labels: &LabelSet) -> Result<EdgeHomophily> {
    let (mut same, mut counted, mut skipped) = (0usize, 0usize, 0usize);
    for (u, v) in graph.edges() {
        match (labels.get(u), labels.get(v)) {
            (Some(a), Some(b)) => {
                counted += 1;
                same += usize::from(a == b);
            }
            _ => skipped += 1,
        }
    }
    if counted == 0 {
        return Err(Error::invalid("no edge has two labeled endpoints"));
    }
    Ok(EdgeHomophily {
        ratio: same as f64 / counted as f64,
        counted,
        skipped,
    })
}

/// Class-insensitive homophily `(1/(c-1)) sum_k max(0, h_k - |C_k|/N)`, where
/// `h_k` is the same-class share of edge endpoints in class `k` and `N` the
/// number of labeled nodes.
pub fn class_insensitive_homophily(graph: &Graph, labels: &LabelSet) -> Result<f64> {
    let c = labels.num_classes();
    let (mut same, mut total) = (vec![0usize; c], vec![0usize; c]);
    let mut counted = 0usize;
    for (u, v) in graph.edges() {
        if let (Some(a), Some(b)) = (labels.get(u), labels.get(v)) {
            counted += 1;
            total[a] += 1;
            total[b] += 1;
            if a == b {
                same[a] += 2;
            }
        }
    }
    if counted == 0 {
        return Err(Error::invalid("no edge has two labeled endpoints"));
    }
    let sizes = labels.class_counts();
    let labeled = labels.num_labeled() as f64;
    let sum: f64 = (0..c)
        .filter(|&k| total[k] > 0)
        .map(|k| (same[k] as f64 / total[k] as f64 - sizes[k] as f64 / labeled).max(0.0))
        .sum();
    Ok((sum / (c - 1) as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(c: &[usize]) -> LabelSet {
        LabelSet::from_classes(c).unwrap()
    }

    #[test]
    fn accuracy_cases() {
        let t = labels(&[0, 1, 0, 1]);
        assert_eq!(accuracy(&[0, 1, 0, 1], &t, &[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 0, 0], &t, &[0, 1, 2, 3]).unwrap(), 0.5);
        assert!(accuracy(&[0, 0, 0, 0], &t, &[]).is_err());
    }

    #[test]
    fn held_out_excludes_priors() {
        let t = labels(&[0, 1, 0, 1]);
        let p = PriorSet::from_nodes(&t, [1, 2]).unwrap();
        assert_eq!(held_out(&t, &p), vec![0, 3]);
    }

    #[test]
    fn homophily_counts() {
        let l = labels(&[0, 0, 0, 1]);
        let tri = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(edge_homophily(&tri, &l).unwrap().ratio, 1.0);
        let cross = Graph::from_edges(4, [(0, 3)]).unwrap();
        assert_eq!(edge_homophily(&cross, &l).unwrap().ratio, 0.0);
        let l = labels(&[0, 0, 1, 1]);
        let mixed = Graph::from_edges(4, [(0, 1), (2, 3), (0, 2), (1, 3)]).unwrap();
        assert_eq!(edge_homophily(&mixed, &l).unwrap().ratio, 0.5);
    }

    #[test]
    fn skips_unlabeled_endpoints() {
        let l = LabelSet::new(vec![Some(0), Some(1), None], vec!["a".into(), "b".into()]).unwrap();
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let h = edge_homophily(&g, &l).unwrap();
        assert_eq!((h.counted, h.skipped), (1, 1));
        let only_unlabeled = Graph::from_edges(3, [(0, 2)]).unwrap();
        assert!(edge_homophily(&only_unlabeled, &l).is_err());
        assert!(class_insensitive_homophily(&only_unlabeled, &l).is_err());
    }

    #[test]
    fn h_hat_extremes() {
        let l = labels(&[0, 0, 1, 1]);
        let homo = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(class_insensitive_homophily(&homo, &l).unwrap(), 1.0);
        let bip = Graph::from_edges(4, [(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        assert_eq!(class_insensitive_homophily(&bip, &l).unwrap(), 0.0);
    }
}
