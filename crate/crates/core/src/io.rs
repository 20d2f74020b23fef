//! Text ingestion and emission: whitespace edge lists and `node<TAB>label` files.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::labels::LabelSet;

#[derive(Debug, Clone, Copy)]
pub struct EdgeListOptions {
    /// Silently collapse repeated pairs. When false a repeated pair is an error.
    pub dedupe: bool,
    /// Node count; defaults to `max id + 1`.
    pub num_nodes: Option<usize>,
}

impl Default for EdgeListOptions {
    fn default() -> Self {
        EdgeListOptions {
            dedupe: true,
            num_nodes: None,
        }
    }
}

fn parse_id(token: &str, line: usize) -> Result<usize> {
    token.parse::<usize>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid node id {token:?}"),
    })
}

/// Reads an edge list: one `u v` pair per line, `#` starts a comment line.
///
/// Self-loops are always dropped.
pub fn read_edge_list<R: BufRead>(reader: R, opts: EdgeListOptions) -> Result<Graph> {
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut max_id = 0usize;
    let mut any = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: line_no,
                message: "expected two node ids".into(),
            });
        };
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected exactly two node ids".into(),
            });
        }
        let u = parse_id(a, line_no)?;
        let v = parse_id(b, line_no)?;
        if u > u32::MAX as usize || v > u32::MAX as usize {
            return Err(Error::Parse {
                line: line_no,
                message: "node id exceeds u32 range".into(),
            });
        }
        any = true;
        max_id = max_id.max(u).max(v);
        if u != v {
            pairs.push((u.min(v) as u32, u.max(v) as u32));
        }
    }
    if !any {
        return Err(Error::EmptyGraph);
    }
    let n = match opts.num_nodes {
        Some(n) if n <= max_id => return Err(Error::NodeOutOfRange { id: max_id, n }),
        Some(n) => n,
        None => max_id + 1,
    };
    pairs.sort_unstable();
    let before = pairs.len();
    pairs.dedup();
    if !opts.dedupe && pairs.len() != before {
        return Err(Error::invalid("edge list contains repeated edges"));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyGraph);
    }
    Ok(Graph::from_sorted_unique(n, &pairs))
}

pub fn write_edge_list<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "# nodes {} edges {}", graph.num_nodes(), graph.num_edges())?;
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

/// Reads `node<TAB>label` lines. Label strings are mapped to class ids in
/// first-seen order.
pub fn read_labels<R: BufRead>(reader: R, num_nodes: usize) -> Result<LabelSet> {
    let mut labels: Vec<Option<u32>> = vec![None; num_nodes];
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (node, label) = trimmed
            .split_once('\t')
            .or_else(|| trimmed.trim().split_once(char::is_whitespace))
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected node<TAB>label".into(),
            })?;
        let node = parse_id(node.trim(), line_no)?;
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty label".into(),
            });
        }
        if node >= num_nodes {
            return Err(Error::NodeOutOfRange { id: node, n: num_nodes });
        }
        let class = match index.get(label) {
            Some(&c) => c,
            None => {
                let c = names.len() as u32;
                names.push(label.to_string());
                index.insert(label.to_string(), c);
                c
            }
        };
        match labels[node] {
            Some(prev) if prev != class => {
                return Err(Error::Labels(format!(
                    "node {node} has conflicting labels {:?} and {label:?}",
                    names[prev as usize]
                )))
            }
            _ => labels[node] = Some(class),
        }
    }
    LabelSet::new(labels, names)
}

pub fn write_labels<W: Write>(labels: &LabelSet, mut out: W) -> Result<()> {
    for (node, class) in labels.iter_labeled() {
        writeln!(out, "{node}\t{}", labels.class_name(class))?;
    }
    Ok(())
}

/// Writes per-node predictions using the original class names.
pub fn write_predictions<W: Write>(labels: &LabelSet, predictions: &[usize], mut out: W) -> Result<()> {
    for (node, &class) in predictions.iter().enumerate() {
        writeln!(out, "{node}\t{}", labels.class_name(class))?;
    }
    Ok(())
}
