//! Mixed graphs with directed (`u -> v`) and bidirected (`u <-> v`) edges.
//!
//! Vertices are dense indices in declaration order; every matrix in the crate
//! is indexed the same way. A digraph is a [`MixedGraph`] whose bidirected
//! edge set is empty.

mod algo;
mod chordal;
pub mod io;

pub use algo::{
    ancestors, bidirected_cliques, canonical_dag, chain_components, clique_digraph,
    clique_digraph_with, is_chain_graph, validate, ChainComponentPartition, CliqueSelection,
    HiddenMap, ValidationReport,
};
pub use chordal::{is_decomposable, DecomposabilityReport};
pub(crate) use algo::count_paths_into;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vertex index into a graph's declaration order.
pub type Vertex = usize;

/// Ordered vertex set; iteration follows declaration order.
pub type VertexSet = BTreeSet<Vertex>;

/// Label-level graph description, exactly as read from a file.
///
/// This is the JSON interchange form
/// `{"nodes":[...],"directed":[[u,v],...],"bidirected":[[u,v],...]}`.
/// It may contain defects (self-loops, unknown labels, duplicates); see
/// [`validate`] and [`MixedGraph::from_raw`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGraph {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub directed: Vec<(String, String)>,
    #[serde(default)]
    pub bidirected: Vec<(String, String)>,
}

/// An immutable mixed graph `(V, D, B)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedGraph {
    labels: Vec<String>,
    index: HashMap<String, Vertex>,
    directed: BTreeSet<(Vertex, Vertex)>,
    bidirected: BTreeSet<(Vertex, Vertex)>,
    parents: Vec<Vec<Vertex>>,
    children: Vec<Vec<Vertex>>,
    siblings: Vec<Vec<Vertex>>,
}

impl MixedGraph {
    /// Builds a graph from labels and index-level edges.
    ///
    /// Duplicate edges collapse; bidirected pairs are stored as `(min, max)`.
    /// Self-loops, out-of-range indices and repeated labels are rejected.
    pub fn new(
        labels: Vec<String>,
        directed: impl IntoIterator<Item = (Vertex, Vertex)>,
        bidirected: impl IntoIterator<Item = (Vertex, Vertex)>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate node `{l}`")));
            }
        }
        let check = |u: Vertex, v: Vertex| -> Result<()> {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) out of range for {n} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at `{}`", labels[u])));
            }
            Ok(())
        };
        let mut d = BTreeSet::new();
        for (u, v) in directed {
            check(u, v)?;
            d.insert((u, v));
        }
        let mut b = BTreeSet::new();
        for (u, v) in bidirected {
            check(u, v)?;
            b.insert((u.min(v), u.max(v)));
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut siblings = vec![Vec::new(); n];
        for &(u, v) in &d {
            children[u].push(v);
            parents[v].push(u);
        }
        for &(u, v) in &b {
            siblings[u].push(v);
            siblings[v].push(u);
        }
        for list in parents.iter_mut().chain(children.iter_mut()).chain(siblings.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            labels,
            index,
            directed: d,
            bidirected: b,
            parents,
            children,
            siblings,
        })
    }

    /// Convenience constructor from string labels.
    pub fn from_labels(
        nodes: &[&str],
        directed: &[(&str, &str)],
        bidirected: &[(&str, &str)],
    ) -> Result<Self> {
        let raw = RawGraph {
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            directed: directed
                .iter()
                .map(|(u, v)| (u.to_string(), v.to_string()))
                .collect(),
            bidirected: bidirected
                .iter()
                .map(|(u, v)| (u.to_string(), v.to_string()))
                .collect(),
        };
        Self::from_raw(&raw)
    }

    /// Resolves labels; fails on unknown labels, self-loops or repeated nodes.
    pub fn from_raw(raw: &RawGraph) -> Result<Self> {
        let lookup: HashMap<&str, Vertex> = raw
            .nodes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let resolve = |pairs: &[(String, String)]| -> Result<Vec<(Vertex, Vertex)>> {
            pairs
                .iter()
                .map(|(u, v)| {
                    let a = *lookup
                        .get(u.as_str())
                        .ok_or_else(|| Error::UnknownVertex(u.clone()))?;
                    let b = *lookup
                        .get(v.as_str())
                        .ok_or_else(|| Error::UnknownVertex(v.clone()))?;
                    Ok((a, b))
                })
                .collect()
        };
        let d = resolve(&raw.directed)?;
        let b = resolve(&raw.bidirected)?;
        Self::new(raw.nodes.clone(), d, b)
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            nodes: self.labels.clone(),
            directed: self
                .directed
                .iter()
                .map(|&(u, v)| (self.labels[u].clone(), self.labels[v].clone()))
                .collect(),
            bidirected: self
                .bidirected
                .iter()
                .map(|&(u, v)| (self.labels[u].clone(), self.labels[v].clone()))
                .collect(),
        }
    }

    /// A digraph on `labels` with the given edges.
    pub fn digraph(labels: Vec<String>, edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Self> {
        Self::new(labels, edges, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, v: Vertex) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<Vertex> {
        self.index.get(label).copied()
    }

    /// Like [`index_of`](Self::index_of) but fails with `UnknownVertex`.
    pub fn vertex(&self, label: &str) -> Result<Vertex> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn vertex_set(&self, labels: &[&str]) -> Result<VertexSet> {
        labels.iter().map(|l| self.vertex(l)).collect()
    }

    pub fn labels_of<'a>(&'a self, set: impl IntoIterator<Item = &'a Vertex>) -> Vec<String> {
        set.into_iter().map(|&v| self.labels[v].clone()).collect()
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.directed.iter().copied()
    }

    pub fn bidirected_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.bidirected.iter().copied()
    }

    pub fn num_directed(&self) -> usize {
        self.directed.len()
    }

    pub fn num_bidirected(&self) -> usize {
        self.bidirected.len()
    }

    pub fn parents(&self, v: Vertex) -> &[Vertex] {
        &self.parents[v]
    }

    pub fn children(&self, v: Vertex) -> &[Vertex] {
        &self.children[v]
    }

    /// Bidirected neighbours of `v`.
    pub fn siblings(&self, v: Vertex) -> &[Vertex] {
        &self.siblings[v]
    }

    pub fn has_directed(&self, u: Vertex, v: Vertex) -> bool {
        self.directed.contains(&(u, v))
    }

    pub fn has_bidirected(&self, u: Vertex, v: Vertex) -> bool {
        self.bidirected.contains(&(u.min(v), u.max(v)))
    }

    pub fn is_digraph(&self) -> bool {
        self.bidirected.is_empty()
    }

    /// `D ∩ B = ∅` (no pair joined by both edge kinds).
    pub fn is_simple(&self) -> bool {
        self.directed
            .iter()
            .all(|&(u, v)| !self.has_bidirected(u, v))
    }

    /// Kahn's algorithm, always releasing the smallest available index first.
    pub fn topological_order(&self) -> Option<Vec<Vertex>> {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut ready: BTreeSet<Vertex> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    pub(crate) fn require_acyclic(&self) -> Result<Vec<Vertex>> {
        self.topological_order().ok_or(Error::NotAcyclic)
    }

    pub(crate) fn require_digraph(&self) -> Result<()> {
        if self.is_digraph() {
            Ok(())
        } else {
            Err(Error::NotDigraph)
        }
    }

    /// Subgraph induced by `keep`, relabelled densely in the original order.
    pub fn induced(&self, keep: &VertexSet) -> MixedGraph {
        let map: HashMap<Vertex, Vertex> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let labels = keep.iter().map(|&v| self.labels[v].clone()).collect();
        let d = self
            .directed
            .iter()
            .filter_map(|(u, v)| Some((*map.get(u)?, *map.get(v)?)));
        let b = self
            .bidirected
            .iter()
            .filter_map(|(u, v)| Some((*map.get(u)?, *map.get(v)?)));
        MixedGraph::new(labels, d, b).expect("induced subgraph of a valid graph is valid")
    }
}
