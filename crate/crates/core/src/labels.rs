//! Ground-truth labels and the observed prior subset.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::seed::{self, STREAM_PRIORS};

/// Per-node class ids in `[0, c)`, or unlabeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<Option<u32>>,
    class_names: Vec<String>,
}

impl LabelSet {
    /// Requires `c >= 2` and at least one node for every class id.
    pub fn new(labels: Vec<Option<u32>>, class_names: Vec<String>) -> Result<Self> {
        let c = class_names.len();
        if c < 2 {
            return Err(Error::Labels(format!("need at least 2 classes, found {c}")));
        }
        let mut seen = vec![false; c];
        for l in labels.iter().flatten() {
            let l = *l as usize;
            if l >= c {
                return Err(Error::Labels(format!("class id {l} >= {c}")));
            }
            seen[l] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Labels(format!("class {k} has no members")));
        }
        Ok(LabelSet {
            labels,
            class_names,
        })
    }

    /// Fully labeled set with class names `"0"`, `"1"`, ...
    pub fn from_classes(classes: &[usize]) -> Result<Self> {
        let c = classes.iter().max().map_or(0, |m| m + 1);
        LabelSet::new(
            classes.iter().map(|&k| Some(k as u32)).collect(),
            (0..c).map(|k| k.to_string()).collect(),
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.labels[node].map(|l| l as usize)
    }

    pub fn class_name(&self, class: usize) -> &str {
        &self.class_names[class]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_labeled(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn iter_labeled(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (i, l as usize)))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for (_, k) in self.iter_labeled() {
            counts[k] += 1;
        }
        counts
    }

    fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_classes()];
        for (i, k) in self.iter_labeled() {
            members[k].push(i);
        }
        members
    }
}

/// The labeled nodes whose labels are treated as observed.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSet {
    nodes: Vec<usize>,
    mask: Vec<bool>,
    pub fraction: f64,
    pub seed: u64,
}

impl PriorSet {
    /// Prior set from an explicit node list. Every node must be labeled.
    pub fn from_nodes(labels: &LabelSet, nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; labels.num_nodes()];
        let mut list = Vec::new();
        for i in nodes {
            if i >= labels.num_nodes() {
                return Err(Error::NodeOutOfRange {
                    id: i,
                    n: labels.num_nodes(),
                });
            }
            if labels.get(i).is_none() {
                return Err(Error::invalid(format!("prior node {i} is unlabeled")));
            }
            if !mask[i] {
                mask[i] = true;
                list.push(i);
            }
        }
        list.sort_unstable();
        let labeled = labels.num_labeled().max(1);
        Ok(PriorSet {
            fraction: list.len() as f64 / labeled as f64,
            nodes: list,
            mask,
            seed: 0,
        })
    }

    /// Every labeled node.
    pub fn all(labels: &LabelSet) -> Self {
        let mut p = PriorSet::from_nodes(labels, labels.iter_labeled().map(|(i, _)| i))
            .expect("labeled nodes are valid priors");
        p.fraction = 1.0;
        p
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.mask[node]
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("prior fraction {fraction} not in (0, 1]")));
    }
    Ok(())
}

fn draw(pool: &[usize], count: usize, rng: &mut seed::TaskRng, out: &mut Vec<usize>) {
    if count >= pool.len() {
        out.extend_from_slice(pool);
    } else {
        out.extend(index::sample(rng, pool.len(), count).into_iter().map(|k| pool[k]));
    }
}

/// Samples priors without replacement.
///
/// Uniform mode draws `max(1, floor(fraction * labeled))` nodes from all
/// labeled nodes; stratified mode draws `floor(fraction * |class|)` per class
/// and requires that to be at least one for every class.
pub fn sample_priors(labels: &LabelSet, fraction: f64, seed: u64, stratified: bool) -> Result<PriorSet> {
    check_fraction(fraction)?;
    if stratified {
        let rates = vec![fraction; labels.num_classes()];
        let mut p = sample_priors_per_class(labels, &rates, seed)?;
        p.fraction = fraction;
        return Ok(p);
    }
    let pool: Vec<usize> = labels.iter_labeled().map(|(i, _)| i).collect();
    let count = ((fraction * pool.len() as f64).floor() as usize).max(1);
    let mut rng = seed::task_rng(seed, &[STREAM_PRIORS]);
    let mut chosen = Vec::with_capacity(count);
    draw(&pool, count, &mut rng, &mut chosen);
    let mut p = PriorSet::from_nodes(labels, chosen)?;
    p.fraction = fraction;
    p.seed = seed;
    Ok(p)
}

/// Samples `floor(rate_k * |class k|)` nodes from every class `k`.
///
/// Used for stratified sampling and for deliberately imbalanced prior sets
/// (e.g. one class observed ten times as often as the rest).
pub fn sample_priors_per_class(labels: &LabelSet, rates: &[f64], seed: u64) -> Result<PriorSet> {
    if rates.len() != labels.num_classes() {
        return Err(Error::invalid("one sampling rate per class required"));
    }
    let members = labels.members();
    let mut chosen = Vec::new();
    for (k, (pool, &rate)) in members.iter().zip(rates).enumerate() {
        check_fraction(rate)?;
        let count = (rate * pool.len() as f64).floor() as usize;
        if count == 0 {
            return Err(Error::invalid(format!(
                "rate {rate} selects no node of class {k} ({} members)",
                pool.len()
            )));
        }
        let mut rng = seed::task_rng(seed, &[STREAM_PRIORS, k as u64 + 1]);
        draw(pool, count, &mut rng, &mut chosen);
    }
    let mut p = PriorSet::from_nodes(labels, chosen)?;
    p.seed = seed;
    Ok(p)
}
