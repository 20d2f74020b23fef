//! Block-structured synthetic graphs driven by a class mixing matrix.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::labels::LabelSet;
use crate::seed;

const STREAM_STRUCTURE: u64 = 10;
const STREAM_NOISE: u64 = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub class_sizes: Vec<usize>,
    /// Nonnegative `c x c` mixing weights; row `a` describes where class-`a`
    /// endpoints connect.
    pub h_mix: Vec<Vec<f64>>,
    pub m_target: usize,
    /// Fraction of edges drawn uniformly over all node pairs.
    pub noise_frac: f64,
    pub seed: u64,
}

pub const PRESET_NAMES: &[&str] = &["xophily", "weak", "no-gne", "homophily", "bipartite"];

impl GeneratorSpec {
    pub fn num_nodes(&self) -> usize {
        self.class_sizes.iter().sum()
    }

    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.num_classes();
        if c < 2 {
            return Err(Error::invalid("at least 2 classes required"));
        }
        if self.class_sizes.contains(&0) {
            return Err(Error::invalid("every class needs at least one node"));
        }
        if self.h_mix.len() != c || self.h_mix.iter().any(|r| r.len() != c) {
            return Err(Error::invalid(format!("h_mix must be {c} x {c}")));
        }
        for (a, row) in self.h_mix.iter().enumerate() {
            if row.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                return Err(Error::invalid(format!("h_mix row {a} has a negative or non-finite weight")));
            }
            if row.iter().sum::<f64>() <= 0.0 {
                return Err(Error::invalid(format!("h_mix row {a} sums to zero")));
            }
        }
        if !(0.0..1.0).contains(&self.noise_frac) {
            return Err(Error::invalid("noise_frac must be in [0, 1)"));
        }
        let n = self.num_nodes();
        if self.m_target == 0 {
            return Err(Error::invalid("m_target must be positive"));
        }
        if self.m_target > n * (n - 1) / 2 {
            return Err(Error::Infeasible(format!("{} edges do not fit a simple graph on {n} nodes", self.m_target)));
        }
        Ok(())
    }

    /// Named desk-scale presets.
    pub fn preset(name: &str, seed: u64) -> Result<GeneratorSpec> {
        let spec = |class_sizes: Vec<usize>, h_mix: Vec<Vec<f64>>, m_target, noise_frac| GeneratorSpec {
            class_sizes,
            h_mix,
            m_target,
            noise_frac,
            seed,
        };
        match name {
            // heterophilous pairs (0,1) and (2,3), homophilous classes 4 and 5,
            // 0.07 between unrelated classes
            "xophily" => {
                let mut h = vec![vec![0.07; 6]; 6];
                for (a, b) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
                    h[a][a] = 0.03;
                    h[a][b] = 0.69;
                }
                h[4][4] = 0.65;
                h[5][5] = 0.65;
                Ok(spec(vec![2000; 6], h, 60_000, 0.1))
            }
            // two heterophilous pairs plus one class wired uniformly to everything
            "weak" => {
                let h = vec![
                    vec![0.2, 0.6, 0.0, 0.0, 0.2],
                    vec![0.6, 0.2, 0.0, 0.0, 0.2],
                    vec![0.0, 0.0, 0.2, 0.6, 0.2],
                    vec![0.0, 0.0, 0.6, 0.2, 0.2],
                    vec![0.2; 5],
                ];
                Ok(spec(vec![2000; 5], h, 50_000, 0.1))
            }
            "no-gne" | "random" => Ok(spec(vec![1000; 4], vec![vec![0.25; 4]; 4], 20_000, 0.0)),
            "homophily" => {
                let h = (0..6)
                    .map(|a| (0..6).map(|b| if a == b { 0.7 } else { 0.06 }).collect())
                    .collect();
                Ok(spec(vec![1000; 6], h, 30_000, 0.1))
            }
            "bipartite" => Ok(spec(vec![1000; 2], vec![vec![0.0, 1.0], vec![1.0, 0.0]], 5_000, 0.0)),
            other => Err(Error::invalid(format!(
                "unknown preset {other:?} (expected one of {})",
                PRESET_NAMES.join(", ")
            ))),
        }
    }

    /// Expected fraction of structural edges joining each unordered class pair
    /// `(a, b)` with `a <= b`, stored at `[a][b]`.
    pub fn expected_pair_fractions(&self) -> Vec<Vec<f64>> {
        let c = self.num_classes();
        let w = self.ordered_pair_weights();
        let total: f64 = w.iter().sum();
        let mut out = vec![vec![0.0; c]; c];
        for a in 0..c {
            for b in 0..c {
                out[a.min(b)][a.max(b)] += w[a * c + b] / total;
            }
        }
        out
    }

    fn ordered_pair_weights(&self) -> Vec<f64> {
        let c = self.num_classes();
        (0..c * c)
            .map(|k| self.class_sizes[k / c] as f64 * self.h_mix[k / c][k % c])
            .collect()
    }
}

/// Draws a simple graph and block labels from `spec`.
///
/// Structural edges pick an ordered class pair with probability proportional
/// to `|C_a| * h_mix[a][b]`, then uniform endpoints inside those classes.
/// Noise edges are uniform over all pairs. Self-loops and repeats are
/// redrawn, so the result has exactly `m_target` edges.
pub fn generate(spec: &GeneratorSpec) -> Result<(Graph, LabelSet)> {
    spec.validate()?;
    let c = spec.num_classes();
    let n = spec.num_nodes();
    let mut starts = Vec::with_capacity(c + 1);
    starts.push(0usize);
    for s in &spec.class_sizes {
        starts.push(starts.last().unwrap() + s);
    }
    let m_noise = (spec.noise_frac * spec.m_target as f64).round() as usize;
    let m_struct = spec.m_target - m_noise;
    let budget = 50 * spec.m_target + 10_000;

    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(spec.m_target);
    let mut insert = |u: usize, v: usize| u != v && seen.insert((u.min(v) as u32, u.max(v) as u32));

    let pairs = WeightedIndex::new(spec.ordered_pair_weights())
        .map_err(|e| Error::invalid(format!("h_mix weights: {e}")))?;
    let mut rng = seed::task_rng(spec.seed, &[STREAM_STRUCTURE]);
    let (mut added, mut attempts) = (0, 0);
    while added < m_struct {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Infeasible(format!(
                "could only place {added} of {m_struct} block edges; the mixing matrix saturates some class pair"
            )));
        }
        let k = pairs.sample(&mut rng);
        let (a, b) = (k / c, k % c);
        let u = rng.random_range(starts[a]..starts[a + 1]);
        let v = rng.random_range(starts[b]..starts[b + 1]);
        if insert(u, v) {
            added += 1;
        }
    }
    let mut rng = seed::task_rng(spec.seed, &[STREAM_NOISE]);
    let (mut added, mut attempts) = (0, 0);
    while added < m_noise {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Infeasible(format!("could only place {added} of {m_noise} noise edges")));
        }
        if insert(rng.random_range(0..n), rng.random_range(0..n)) {
            added += 1;
        }
    }

    let mut edges: Vec<(u32, u32)> = seen.into_iter().collect();
    edges.sort_unstable();
    let graph = Graph::from_sorted_unique(n, &edges);
    let classes: Vec<usize> = (0..c).flat_map(|k| std::iter::repeat_n(k, spec.class_sizes[k])).collect();
    let labels = LabelSet::from_classes(&classes)?;
    Ok((graph, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::edge_homophily;

    fn two_class(h: [[f64; 2]; 2], noise: f64, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            class_sizes: vec![200, 200],
            h_mix: h.iter().map(|r| r.to_vec()).collect(),
            m_target: 2000,
            noise_frac: noise,
            seed,
        }
    }

    #[test]
    fn identity_mixing_is_homophilous() {
        let (g, l) = generate(&two_class([[1.0, 0.0], [0.0, 1.0]], 0.0, 1)).unwrap();
        assert_eq!(g.num_edges(), 2000);
        assert_eq!(edge_homophily(&g, &l).unwrap().ratio, 1.0);
        g.validate().unwrap();
    }

    #[test]
    fn off_diagonal_mixing_is_heterophilous() {
        let (g, l) = generate(&two_class([[0.0, 1.0], [1.0, 0.0]], 0.0, 1)).unwrap();
        assert_eq!(edge_homophily(&g, &l).unwrap().ratio, 0.0);
    }

    #[test]
    fn deterministic() {
        let s = two_class([[0.3, 0.7], [0.7, 0.3]], 0.2, 5);
        let (g1, _) = generate(&s).unwrap();
        let (g2, _) = generate(&s).unwrap();
        assert_eq!(g1, g2);
        let (g3, _) = generate(&GeneratorSpec { seed: 6, ..s }).unwrap();
        assert_ne!(g1, g3);
    }

    #[test]
    fn infeasible_targets() {
        let mut s = two_class([[1.0, 0.0], [0.0, 1.0]], 0.0, 1);
        s.class_sizes = vec![3, 3];
        s.m_target = 16;
        assert!(matches!(generate(&s), Err(Error::Infeasible(_))));
        // fits the graph but not the two 3-cliques the mixing allows
        s.m_target = 7;
        assert!(matches!(generate(&s), Err(Error::Infeasible(_))));
    }

    #[test]
    fn spec_validation() {
        let ok = two_class([[1.0, 0.0], [0.0, 1.0]], 0.0, 1);
        assert!(GeneratorSpec { noise_frac: 1.0, ..ok.clone() }.validate().is_err());
        assert!(GeneratorSpec { class_sizes: vec![0, 3], ..ok.clone() }.validate().is_err());
        assert!(GeneratorSpec { h_mix: vec![vec![0.0, 0.0], vec![0.0, 1.0]], ..ok.clone() }.validate().is_err());
        assert!(GeneratorSpec { h_mix: vec![vec![1.0]], ..ok }.validate().is_err());
    }

    #[test]
    fn presets_exist() {
        for name in PRESET_NAMES {
            GeneratorSpec::preset(name, 0).unwrap().validate().unwrap();
        }
        assert!(GeneratorSpec::preset("nope", 0).is_err());
    }

    #[test]
    fn pair_fractions() {
        let s = two_class([[0.25, 0.75], [0.75, 0.25]], 0.0, 1);
        let f = s.expected_pair_fractions();
        assert!((f[0][0] - 0.125).abs() < 1e-12);
        assert!((f[0][1] - 0.75).abs() < 1e-12);
        assert_eq!(f[1][0], 0.0);
    }
}
