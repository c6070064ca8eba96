//! Graph data model and dataset container.
//!
//! Graphs are undirected, attributed, and labelled. Node attributes double
//! as the evaluation attributes referenced by the metrics pipeline, and the
//! generator records the planted motif's node set as ground truth for
//! explanation scoring.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::write_atomic;

#[derive(Error, Debug)]
pub enum GraphError {
    #[error("graph {index}: {reason}")]
    InvalidGraph { index: usize, reason: String },
    #[error("dataset: {0}")]
    InvalidDataset(String),
    #[error("induced subgraph requires a nonempty node set")]
    EmptyNodeSet,
    #[error("node index {node} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("failed to parse dataset file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An undirected attributed graph with a class label.
///
/// Edges are stored as `(u, v)` with `u < v`, sorted and deduplicated.
/// `motif_nodes` carries the generator's ground-truth explanation when the
/// graph came from the synthetic benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub features: Vec<Vec<f64>>,
    pub label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motif_nodes: Option<Vec<usize>>,
}

impl Graph {
    pub fn new(
        n: usize,
        mut edges: Vec<(usize, usize)>,
        features: Vec<Vec<f64>>,
        label: usize,
    ) -> Result<Self, GraphError> {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let g = Graph {
            n,
            edges,
            features,
            label,
            motif_nodes: None,
        };
        g.validate(usize::MAX, None)?;
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Checks the structural invariants, reporting `index` in errors so a
    /// bad record in a dataset file can be located.
    pub fn validate(&self, index: usize, class_count: Option<usize>) -> Result<(), GraphError> {
        let fail = |reason: String| GraphError::InvalidGraph { index, reason };
        if self.n == 0 {
            return Err(fail("node count must be at least 1".into()));
        }
        if self.features.len() != self.n {
            return Err(fail(format!(
                "features has {} rows, expected {}",
                self.features.len(),
                self.n
            )));
        }
        let d = self.feature_dim();
        for (i, row) in self.features.iter().enumerate() {
            if row.len() != d {
                return Err(fail(format!("feature row {i} has ragged width")));
            }
        }
        for &(u, v) in &self.edges {
            if u >= self.n || v >= self.n {
                return Err(fail(format!("edge ({u}, {v}) has endpoint >= n = {}", self.n)));
            }
            if u == v {
                return Err(fail(format!("self-loop at node {u}")));
            }
        }
        if let Some(t) = class_count {
            if self.label >= t {
                return Err(fail(format!("label {} >= class count {t}", self.label)));
            }
        }
        if let Some(motif) = &self.motif_nodes {
            for &m in motif {
                if m >= self.n {
                    return Err(fail(format!("motif node {m} >= n = {}", self.n)));
                }
            }
        }
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search(&key).is_ok()
    }

    /// Dense 0/1 adjacency, symmetric with zero diagonal.
    pub fn adjacency(&self) -> crate::linalg::Matrix {
        let mut a = crate::linalg::Matrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a.set(u, v, 1.0);
            a.set(v, u, 1.0);
        }
        a
    }
}

/// Names the attribute columns and groups them into named concepts for the
/// separability metrics. Concept column sets are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attribute_names: Vec<String>,
    pub concepts: Vec<(String, Vec<usize>)>,
}

impl AttributeSchema {
    pub fn validate(&self) -> Result<(), GraphError> {
        let d = self.attribute_names.len();
        let mut seen = BTreeSet::new();
        for (name, cols) in &self.concepts {
            for &c in cols {
                if c >= d {
                    return Err(GraphError::InvalidDataset(format!(
                        "concept {name} references attribute column {c} >= {d}"
                    )));
                }
                if !seen.insert(c) {
                    return Err(GraphError::InvalidDataset(format!(
                        "attribute column {c} appears in more than one concept"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Disjoint train/validation/test partition of dataset graph indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: AttributeSchema,
    pub class_names: Vec<String>,
    pub splits: Splits,
    pub graphs: Vec<Graph>,
}

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_dim)
    }

    pub fn split_graphs(&self, indices: &[usize]) -> Vec<&Graph> {
        indices.iter().map(|&i| &self.graphs[i]).collect()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        self.schema.validate()?;
        let t = self.class_count();
        for (i, g) in self.graphs.iter().enumerate() {
            g.validate(i, Some(t))?;
        }
        let mut seen = BTreeSet::new();
        for (name, split) in [
            ("train", &self.splits.train),
            ("validation", &self.splits.validation),
            ("test", &self.splits.test),
        ] {
            for &i in split {
                if i >= self.graphs.len() {
                    return Err(GraphError::InvalidDataset(format!(
                        "{name} split references graph {i} out of range"
                    )));
                }
                if !seen.insert(i) {
                    return Err(GraphError::InvalidDataset(format!(
                        "graph {i} appears in more than one split"
                    )));
                }
            }
        }
        if seen.len() != self.graphs.len() {
            return Err(GraphError::InvalidDataset(
                "splits do not cover every graph".into(),
            ));
        }
        Ok(())
    }
}

/// Extracts the node-induced subgraph on `nodes`.
///
/// Node indices are compacted to `[0, |nodes|)` preserving ascending order
/// of the originals; the label is copied and surviving motif nodes are
/// remapped.
pub fn induced_subgraph(graph: &Graph, nodes: &[usize]) -> Result<Graph, GraphError> {
    let selected: BTreeSet<usize> = nodes.iter().copied().collect();
    if selected.is_empty() {
        return Err(GraphError::EmptyNodeSet);
    }
    for &v in &selected {
        if v >= graph.n {
            return Err(GraphError::NodeOutOfRange {
                node: v,
                node_count: graph.n,
            });
        }
    }
    let old_order: Vec<usize> = selected.iter().copied().collect();
    let mut remap = vec![usize::MAX; graph.n];
    for (new, &old) in old_order.iter().enumerate() {
        remap[old] = new;
    }
    let edges: Vec<(usize, usize)> = graph
        .edges
        .iter()
        .filter(|&&(u, v)| selected.contains(&u) && selected.contains(&v))
        .map(|&(u, v)| (remap[u], remap[v]))
        .collect();
    let features = old_order.iter().map(|&v| graph.features[v].clone()).collect();
    let motif_nodes = graph.motif_nodes.as_ref().map(|motif| {
        motif
            .iter()
            .filter(|&&m| selected.contains(&m))
            .map(|&m| remap[m])
            .collect()
    });
    Ok(Graph {
        n: old_order.len(),
        edges,
        features,
        label: graph.label,
        motif_nodes,
    })
}

/// Selects the ceil(k * n) nodes with the largest mask values.
///
/// Ties break toward the smaller node index, so the selection is
/// deterministic across platforms. `k` must lie in (0, 1].
pub fn top_k_nodes(mask: &[f64], sparsity_k: f64) -> Vec<usize> {
    let n = mask.len();
    assert!(n >= 1, "mask must be nonempty");
    assert!(
        sparsity_k > 0.0 && sparsity_k <= 1.0,
        "sparsity must lie in (0, 1]"
    );
    assert!(mask.iter().all(|v| v.is_finite()), "mask entries must be finite");
    let count = ((sparsity_k * n as f64).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        mask[b]
            .partial_cmp(&mask[a])
            .expect("finite mask values")
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = order[..count].to_vec();
    selected.sort_unstable();
    selected
}

/// Complement of a node subset within `[0, n)`.
pub fn complement_nodes(n: usize, nodes: &[usize]) -> Vec<usize> {
    let selected: BTreeSet<usize> = nodes.iter().copied().collect();
    (0..n).filter(|v| !selected.contains(v)).collect()
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), GraphError> {
    dataset.validate()?;
    let text = serde_json::to_string_pretty(dataset)?;
    write_atomic(path, &text)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset, GraphError> {
    let text = std::fs::read_to_string(path)?;
    let dataset: Dataset = serde_json::from_str(&text)?;
    dataset.validate()?;
    Ok(dataset)
}
