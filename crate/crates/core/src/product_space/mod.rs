//! The product space itself: a weighted graph over products whose edges are
//! proximities at or above a threshold, plus connectivity diagnostics, a
//! deterministic layout, and exchange formats.

mod export;
mod layout;
mod percolation;

pub use export::{export_graph, import_node_link, GraphFormat};
pub use layout::{layout, LayoutResult};
pub use percolation::{percolation_sweep, percolation_threshold, PercolationPoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{ProximityMatrix, SophisticationVector};
use crate::trade_data::{classify_sector, ProductRegistry, SectorClass};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge threshold must be a finite value in [0, 1], got {0}")]
    BadThreshold(f64),
    #[error("percolation grid is empty or not finite")]
    BadGrid,
    #[error("unknown graph format `{0}` (expected csv, json, or gexf)")]
    UnknownFormat(String),
    #[error("annotations must cover exactly the graph's products; {0}")]
    AnnotationMismatch(String),
    #[error("layout does not match the graph's node count")]
    LayoutMismatch,
    #[error("node-link document: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Whether a proximity exactly at the threshold keeps its edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    Inclusive,
    Exclusive,
}

impl ThresholdRule {
    fn keeps(self, weight: f64, threshold: f64) -> bool {
        match self {
            ThresholdRule::Inclusive => weight >= threshold,
            ThresholdRule::Exclusive => weight > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceNode {
    pub code: String,
    /// Registry name; empty until [`SpaceGraph::annotate_names`] runs.
    pub name: String,
    pub sector: Option<SectorClass>,
    pub sophistication: Option<f64>,
}

/// Undirected edge between node indices `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGraph {
    pub nodes: Vec<SpaceNode>,
    pub edges: Vec<SpaceEdge>,
    pub threshold: f64,
    pub rule: ThresholdRule,
    /// Connected components with at least one edge, each sorted, ordered by
    /// their smallest node index.
    pub components: Vec<Vec<usize>>,
    /// Nodes without any edge at this threshold, sorted.
    pub isolated: Vec<usize>,
}

impl SpaceGraph {
    pub fn node_index(&self, code: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.code == code)
    }

    /// Pull display names for every node the registry knows.
    pub fn annotate_names(&mut self, registry: &ProductRegistry) {
        for node in &mut self.nodes {
            node.name = registry.name(&node.code).to_string();
        }
    }

    /// Attach sophistication scores where they are defined.
    pub fn annotate_sophistication(&mut self, scores: &SophisticationVector) {
        for node in &mut self.nodes {
            node.sophistication = scores.value(&node.code);
        }
    }
}

/// Keep every proximity at or above the threshold as an edge.
pub fn build_graph(phi: &ProximityMatrix, threshold: f64) -> Result<SpaceGraph, GraphError> {
    build_graph_with(phi, threshold, ThresholdRule::Inclusive)
}

/// As [`build_graph`], with an explicit rule for weights exactly at the
/// threshold. The diagonal never produces an edge.
pub fn build_graph_with(
    phi: &ProximityMatrix,
    threshold: f64,
    rule: ThresholdRule,
) -> Result<SpaceGraph, GraphError> {
    if !threshold.is_finite() || !(0.0..=1.0).contains(&threshold) {
        return Err(GraphError::BadThreshold(threshold));
    }
    let n = phi.products.len();
    let nodes = phi
        .products
        .iter()
        .map(|code| SpaceNode {
            code: code.clone(),
            name: String::new(),
            sector: classify_sector(code).ok(),
            sophistication: None,
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = phi.values[(i, j)];
            if rule.keeps(w, threshold) {
                edges.push(SpaceEdge {
                    a: i,
                    b: j,
                    weight: w,
                });
            }
        }
    }
    let (components, isolated) = connectivity(n, &edges);
    Ok(SpaceGraph {
        nodes,
        edges,
        threshold,
        rule,
        components,
        isolated,
    })
}

/// Union-find over node indices.
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> DisjointSets {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub(crate) fn connectivity(n: usize, edges: &[SpaceEdge]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut sets = DisjointSets::new(n);
    let mut has_edge = vec![false; n];
    for e in edges {
        sets.union(e.a, e.b);
        has_edge[e.a] = true;
        has_edge[e.b] = true;
    }
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    let mut isolated = Vec::new();
    for (i, &has) in has_edge.iter().enumerate() {
        if has {
            members.entry(sets.find(i)).or_default().push(i);
        } else {
            isolated.push(i);
        }
    }
    // BTreeMap keys are the minimum member of each set because union always
    // points to the smaller root, so insertion order is already by-minimum
    // and each member list was pushed in ascending node order.
    (members.into_values().collect(), isolated)
}
