//! Detection of generalized network effects with sampled 2x2 chi-squared tests.
//!
//! For every unordered class pair, edges between prior nodes whose endpoint
//! classes both belong to the pair are sampled without replacement until the
//! contingency total exceeds a cap. The Pearson statistic of the halved table
//! is averaged over `rounds` independent samples and converted into a single
//! p-value with one degree of freedom.

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::labels::{LabelSet, PriorSet};
use crate::par;
use crate::seed::{self, TaskRng, STREAM_TEST};

/// An edge between two prior nodes, with the class of each endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledEdge {
    pub u: usize,
    pub v: usize,
    pub class_u: usize,
    pub class_v: usize,
}

/// Edges with both endpoints in the prior set, `u < v`.
pub fn prior_edges(graph: &Graph, priors: &PriorSet, labels: &LabelSet) -> Vec<LabeledEdge> {
    let mut out = Vec::new();
    for &u in priors.nodes() {
        let class_u = labels.get(u).expect("priors are labeled");
        for &v in graph.neighbors(u) {
            let v = v as usize;
            if v > u && priors.contains(v) {
                out.push(LabeledEdge {
                    u,
                    v,
                    class_u,
                    class_v: labels.get(v).expect("priors are labeled"),
                });
            }
        }
    }
    out
}

/// 2x2 table `[[V11, V12], [V21, V22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContingencyTable {
    pub v: [[f64; 2]; 2],
}

impl ContingencyTable {
    pub fn new(v11: f64, v12: f64, v21: f64, v22: f64) -> Self {
        ContingencyTable {
            v: [[v11, v12], [v21, v22]],
        }
    }

    pub fn total(&self) -> f64 {
        self.v.iter().flatten().sum()
    }

    pub fn halved(&self) -> Self {
        let h = |x: f64| x / 2.0;
        ContingencyTable::new(h(self.v[0][0]), h(self.v[0][1]), h(self.v[1][0]), h(self.v[1][1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub rounds: usize,
    /// Sampling stops once the raw contingency total exceeds this.
    pub cap: u32,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            rounds: 1000,
            cap: 500,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        if self.cap < 20 {
            return Err(Error::invalid(format!("cap {} below 20", self.cap)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// Which side of the pair an edge touches, if it lies entirely within it.
fn pair_slot(edge: &LabeledEdge, c1: usize, c2: usize) -> Option<(bool, bool)> {
    let side = |k: usize| {
        if k == c1 {
            Some(false)
        } else if k == c2 {
            Some(true)
        } else {
            None
        }
    };
    Some((side(edge.class_u)?, side(edge.class_v)?))
}

/// Raw table from a set of relevant edges (every edge inside the pair).
fn accumulate<'a>(edges: impl Iterator<Item = &'a LabeledEdge>, c1: usize, c2: usize) -> ContingencyTable {
    let mut t = ContingencyTable::new(0.0, 0.0, 0.0, 0.0);
    for e in edges {
        match pair_slot(e, c1, c2) {
            Some((false, false)) => t.v[0][0] += 2.0,
            Some((true, true)) => t.v[1][1] += 2.0,
            Some(_) => {
                t.v[0][1] += 1.0;
                t.v[1][0] += 1.0;
            }
            None => {}
        }
    }
    t
}

/// Every relevant edge adds exactly 2 to the raw total, so the cap is
/// exceeded after `cap / 2 + 1` of them.
fn edges_until_cap(cap: u32) -> usize {
    cap as usize / 2 + 1
}

/// One sampling round over the relevant edges of a pair; returns the halved table.
fn sample_round(relevant: &[LabeledEdge], c1: usize, c2: usize, cap: u32, rng: &mut TaskRng) -> ContingencyTable {
    let take = edges_until_cap(cap);
    let raw = if take >= relevant.len() {
        accumulate(relevant.iter(), c1, c2)
    } else {
        let picked = index::sample(rng, relevant.len(), take);
        accumulate(picked.iter().map(|k| &relevant[k]), c1, c2)
    };
    raw.halved()
}

/// Samples one contingency table for the class pair `(c1, c2)`.
///
/// Edges are visited in uniformly random order without replacement; an
/// `(c1, c1)` edge adds 2 to `V11`, a cross edge adds 1 to both `V12` and
/// `V21`, a `(c2, c2)` edge adds 2 to `V22`, and edges outside the pair are
/// skipped without consuming the cap. Sampling stops once the total exceeds
/// `cap`. The returned table is `V / 2`; `None` means no relevant edge exists.
pub fn contingency_for_pair(
    edges: &[LabeledEdge],
    c1: usize,
    c2: usize,
    cap: u32,
    rng: &mut TaskRng,
) -> Option<ContingencyTable> {
    assert_ne!(c1, c2, "a pair needs two distinct classes");
    let relevant: Vec<LabeledEdge> = edges
        .iter()
        .filter(|e| pair_slot(e, c1, c2).is_some())
        .copied()
        .collect();
    if relevant.is_empty() {
        return None;
    }
    Some(sample_round(&relevant, c1, c2, cap, rng))
}

/// Pearson statistic of a 2x2 table; 0 when any margin is empty.
pub fn chi2_statistic(table: &ContingencyTable) -> f64 {
    let [[a, b], [c, d]] = table.v;
    let n = a + b + c + d;
    let rows = [a + b, c + d];
    let cols = [a + c, b + d];
    if rows.iter().chain(&cols).any(|&m| m <= 0.0) {
        return 0.0;
    }
    let mut stat = 0.0;
    for (i, row) in table.v.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = rows[i] * cols[j] / n;
            stat += (obs - expected).powi(2) / expected;
        }
    }
    stat
}

/// Upper tail of the chi-squared distribution with one degree of freedom,
/// `erfc(sqrt(x / 2))`.
pub fn chi2_pvalue(statistic: f64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    libm::erfc((statistic / 2.0).sqrt()).clamp(0.0, 1.0)
}

/// Symmetric `c x c` table of p-values; the diagonal is fixed at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueTable {
    pub p: DMatrix<f64>,
    /// Averaged statistics behind `p`.
    pub statistics: DMatrix<f64>,
    /// Pairs that had no relevant prior edge; their p-value is 1.
    pub insufficient: Vec<(usize, usize)>,
}

impl PValueTable {
    pub fn num_classes(&self) -> usize {
        self.p.nrows()
    }

    /// CSV with class names as header row and first column.
    pub fn write_csv<W: Write>(&self, class_names: &[String], mut out: W) -> Result<()> {
        write!(out, "class")?;
        for name in class_names {
            write!(out, ",{}", csv_field(name))?;
        }
        writeln!(out)?;
        for (i, name) in class_names.iter().enumerate() {
            write!(out, "{}", csv_field(name))?;
            for j in 0..self.num_classes() {
                write!(out, ",{}", self.p[(i, j)])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs the averaged test for every unordered class pair.
///
/// Round `b` of pair index `k` draws from a generator seeded by
/// `(seed, k, b)`, so the result is independent of thread count.
pub fn run_test(graph: &Graph, priors: &PriorSet, labels: &LabelSet, config: &TestConfig) -> Result<PValueTable> {
    config.validate()?;
    let c = labels.num_classes();
    let edges = prior_edges(graph, priors, labels);
    let pairs: Vec<(usize, usize)> = (0..c)
        .flat_map(|c1| (c1 + 1..c).map(move |c2| (c1, c2)))
        .collect();
    let relevant: Vec<Vec<LabeledEdge>> = pairs
        .iter()
        .map(|&(c1, c2)| {
            edges
                .iter()
                .filter(|e| pair_slot(e, c1, c2).is_some())
                .copied()
                .collect()
        })
        .collect();

    let rounds = config.rounds;
    let stats: Vec<f64> = par::map_indices(pairs.len() * rounds, |task| {
        let (k, b) = (task / rounds, task % rounds);
        let (c1, c2) = pairs[k];
        let rel = &relevant[k];
        if rel.is_empty() {
            return 0.0;
        }
        if b > 0 && rel.len() <= edges_until_cap(config.cap) {
            // every round sees the whole edge set; round 0 carries the value
            return 0.0;
        }
        let mut rng = seed::task_rng(config.seed, &[STREAM_TEST, k as u64, b as u64]);
        chi2_statistic(&sample_round(rel, c1, c2, config.cap, &mut rng))
    });

    let mut p = DMatrix::from_element(c, c, 1.0);
    let mut statistics = DMatrix::zeros(c, c);
    let mut insufficient = Vec::new();
    for (k, &(c1, c2)) in pairs.iter().enumerate() {
        if relevant[k].is_empty() {
            insufficient.push((c1, c2));
            continue;
        }
        let chunk = &stats[k * rounds..(k + 1) * rounds];
        let mean = if relevant[k].len() <= edges_until_cap(config.cap) {
            chunk[0]
        } else {
            chunk.iter().sum::<f64>() / rounds as f64
        };
        statistics[(c1, c2)] = mean;
        statistics[(c2, c1)] = mean;
        let pv = chi2_pvalue(mean);
        p[(c1, c2)] = pv;
        p[(c2, c1)] = pv;
    }
    Ok(PValueTable {
        p,
        statistics,
        insufficient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectLevel {
    None,
    Weak,
    Strong,
}

impl fmt::Display for EffectLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectLevel::None => "none",
            EffectLevel::Weak => "weak",
            EffectLevel::Strong => "strong",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GneVerdict {
    /// Class `k` has an effect when some other class is distinguishable from it.
    pub per_class: Vec<bool>,
    pub graph_level: EffectLevel,
}

/// Classifies a p-value table.
///
/// `none`: no class is distinguishable from any other. `strong`: every pair is
/// distinguishable. `weak`: anything in between.
pub fn verdict(pvalues: &PValueTable, alpha: f64) -> GneVerdict {
    let c = pvalues.num_classes();
    let rejects = |i: usize, j: usize| pvalues.p[(i, j)] < alpha;
    let per_class: Vec<bool> = (0..c)
        .map(|k| (0..c).any(|j| j != k && rejects(k, j)))
        .collect();
    let all_pairs = (0..c).all(|i| (0..c).all(|j| i == j || rejects(i, j)));
    let graph_level = if !per_class.iter().any(|&b| b) {
        EffectLevel::None
    } else if all_pairs {
        EffectLevel::Strong
    } else {
        EffectLevel::Weak
    };
    GneVerdict {
        per_class,
        graph_level,
    }
}
