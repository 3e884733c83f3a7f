use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::Serialize;

use super::{MixedGraph, RawGraph, Vertex, VertexSet};
use crate::error::{Error, Result};

/// Structural defects and properties of a [`RawGraph`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub duplicate_nodes: Vec<String>,
    pub self_loops: Vec<String>,
    pub duplicate_edges: Vec<String>,
    pub unknown_vertices: Vec<String>,
    /// `None` when the graph is not valid enough to build.
    pub acyclic: Option<bool>,
    pub simple: Option<bool>,
    pub chain_graph: Option<bool>,
}

/// Collects every defect instead of stopping at the first one.
///
/// A graph is *valid* when it has no self-loops, no unknown vertex references
/// and no repeated node labels. Duplicate edges are reported but tolerated.
pub fn validate(raw: &RawGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = HashSet::new();
    for n in &raw.nodes {
        if !seen.insert(n.as_str()) && !report.duplicate_nodes.contains(n) {
            report.duplicate_nodes.push(n.clone());
        }
    }
    let mut check = |kind: &str, pairs: &[(String, String)], symmetric: bool| {
        let mut edges = HashSet::new();
        for (u, v) in pairs {
            for w in [u, v] {
                if !seen.contains(w.as_str()) && !report.unknown_vertices.contains(w) {
                    report.unknown_vertices.push(w.clone());
                }
            }
            if u == v {
                report.self_loops.push(u.clone());
                continue;
            }
            let key = if symmetric && v < u { (v, u) } else { (u, v) };
            if !edges.insert(key) {
                report.duplicate_edges.push(format!("{u} {kind} {v}"));
            }
        }
    };
    check("->", &raw.directed, false);
    check("<->", &raw.bidirected, true);
    report.valid = report.duplicate_nodes.is_empty()
        && report.self_loops.is_empty()
        && report.unknown_vertices.is_empty();
    if report.valid {
        if let Ok(g) = MixedGraph::from_raw(raw) {
            report.acyclic = Some(g.is_acyclic());
            report.simple = Some(g.is_simple());
            report.chain_graph = Some(is_chain_graph(&g));
        }
    }
    report
}

fn bidirected_component_ids(g: &MixedGraph) -> (Vec<usize>, usize) {
    let n = g.n();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in g.siblings(v) {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    queue.push_back(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// True iff no cycle in `D ∪ B` uses a directed edge in its orientation.
///
/// Contracts every connected component of `(V, B)` and checks that the
/// quotient digraph is acyclic and free of self-loops.
pub fn is_chain_graph(g: &MixedGraph) -> bool {
    let (comp, k) = bidirected_component_ids(g);
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for (u, v) in g.directed_edges() {
        if comp[u] == comp[v] {
            return false;
        }
        succ[comp[u]].insert(comp[v]);
    }
    let mut indeg = vec![0usize; k];
    for s in &succ {
        for &t in s {
            indeg[t] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..k).filter(|&c| indeg[c] == 0).collect();
    let mut seen = 0;
    while let Some(c) = stack.pop() {
        seen += 1;
        for &t in &succ[c] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                stack.push(t);
            }
        }
    }
    seen == k
}

/// Connected components of the bidirected part of a chain graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainComponentPartition {
    /// Components ordered by their smallest vertex; members ascending.
    pub components: Vec<Vec<Vertex>>,
    pub component_of: Vec<usize>,
}

impl ChainComponentPartition {
    pub fn component(&self, v: Vertex) -> &[Vertex] {
        &self.components[self.component_of[v]]
    }
}

pub fn chain_components(g: &MixedGraph) -> Result<ChainComponentPartition> {
    if !is_chain_graph(g) {
        return Err(Error::NotChainGraph);
    }
    let (component_of, k) = bidirected_component_ids(g);
    let mut components = vec![Vec::new(); k];
    for (v, &c) in component_of.iter().enumerate() {
        components[c].push(v);
    }
    Ok(ChainComponentPartition {
        components,
        component_of,
    })
}

/// Vertices with a directed path into `targets` that never visits `forbidden`.
///
/// Trivial paths count, so every target is in the result. With an empty
/// `forbidden` set this is `an(S)`; with `forbidden = A` it is the set of
/// ancestors within the subgraph induced by the complement of `A`.
pub fn ancestors(g: &MixedGraph, targets: &VertexSet, forbidden: &VertexSet) -> VertexSet {
    let mut out = targets.clone();
    let mut queue: VecDeque<Vertex> = targets.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &p in g.parents(v) {
            if !forbidden.contains(&p) && out.insert(p) {
                queue.push_back(p);
            }
        }
    }
    out
}

/// All cliques of `(V, B)` with at least `min_size` members.
///
/// Sorted by size, then lexicographically by member indices.
pub fn bidirected_cliques(g: &MixedGraph, min_size: usize) -> Vec<Vec<Vertex>> {
    fn extend(g: &MixedGraph, current: &mut Vec<Vertex>, cands: &[Vertex], out: &mut Vec<Vec<Vertex>>, min: usize) {
        if current.len() >= min {
            out.push(current.clone());
        }
        for (i, &c) in cands.iter().enumerate() {
            let next: Vec<Vertex> = cands[i + 1..]
                .iter()
                .copied()
                .filter(|&w| g.has_bidirected(c, w))
                .collect();
            current.push(c);
            extend(g, current, &next, out, min);
            current.pop();
        }
    }
    let mut out = Vec::new();
    let all: Vec<Vertex> = (0..g.n()).collect();
    extend(g, &mut Vec::new(), &all, &mut out, min_size.max(1));
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Which bidirected cliques receive a hidden parent in the clique digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CliqueSelection {
    /// Every clique with two or more members.
    #[default]
    All,
    /// Only inclusion-maximal cliques with two or more members.
    Maximal,
}

/// Hidden vertices appended after the observed ones in a generated digraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HiddenMap {
    /// Number of observed vertices; they keep indices `0..observed`.
    pub observed: usize,
    /// `(hidden vertex, observed children)` in creation order.
    pub hidden: Vec<(Vertex, Vec<Vertex>)>,
}

impl HiddenMap {
    pub fn is_hidden(&self, v: Vertex) -> bool {
        v >= self.observed
    }

    pub fn hidden_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.hidden.iter().map(|(h, _)| *h)
    }

    pub fn members(&self, h: Vertex) -> Option<&[Vertex]> {
        self.hidden
            .iter()
            .find(|(v, _)| *v == h)
            .map(|(_, m)| m.as_slice())
    }
}

fn hidden_label(g: &MixedGraph, members: &[Vertex], taken: &mut HashSet<String>) -> String {
    let names: Vec<&str> = members.iter().map(|&v| g.label(v)).collect();
    let mut label = format!("h{{{}}}", names.join(","));
    while !taken.insert(label.clone()) {
        label.push('\'');
    }
    label
}

fn attach_hidden(g: &MixedGraph, groups: Vec<Vec<Vertex>>) -> (MixedGraph, HiddenMap) {
    let n = g.n();
    let mut taken: HashSet<String> = g.labels().iter().cloned().collect();
    let mut labels = g.labels().to_vec();
    let mut edges: Vec<(Vertex, Vertex)> = g.directed_edges().collect();
    let mut hidden = Vec::with_capacity(groups.len());
    for (k, members) in groups.into_iter().enumerate() {
        let h = n + k;
        labels.push(hidden_label(g, &members, &mut taken));
        edges.extend(members.iter().map(|&m| (h, m)));
        hidden.push((h, members));
    }
    let d = MixedGraph::new(labels, edges, std::iter::empty())
        .expect("hidden labels are unique and edges in range");
    (d, HiddenMap { observed: n, hidden })
}

/// The clique digraph: one hidden parent per bidirected clique of size ≥ 2.
pub fn clique_digraph(g: &MixedGraph) -> Result<(MixedGraph, HiddenMap)> {
    clique_digraph_with(g, CliqueSelection::All)
}

pub fn clique_digraph_with(g: &MixedGraph, selection: CliqueSelection) -> Result<(MixedGraph, HiddenMap)> {
    g.require_acyclic()?;
    let mut cliques = bidirected_cliques(g, 2);
    if selection == CliqueSelection::Maximal {
        let sets: Vec<BTreeSet<Vertex>> = cliques.iter().map(|c| c.iter().copied().collect()).collect();
        cliques = cliques
            .into_iter()
            .enumerate()
            .filter(|(i, _)| {
                !sets
                    .iter()
                    .enumerate()
                    .any(|(j, s)| j != *i && s.len() > sets[*i].len() && sets[*i].is_subset(s))
            })
            .map(|(_, c)| c)
            .collect();
    }
    Ok(attach_hidden(g, cliques))
}

/// Replaces every bidirected edge `u <-> v` by `u <- h{u,v} -> v`.
pub fn canonical_dag(g: &MixedGraph) -> Result<(MixedGraph, HiddenMap)> {
    g.require_acyclic()?;
    let groups = g.bidirected_edges().map(|(u, v)| vec![u, v]).collect();
    Ok(attach_hidden(g, groups))
}

/// Number of directed paths from every vertex to `target` (used by oracles).
pub(crate) fn count_paths_into(g: &MixedGraph, target: Vertex) -> BTreeMap<Vertex, u128> {
    let order = g.topological_order().unwrap_or_default();
    let mut count: BTreeMap<Vertex, u128> = BTreeMap::new();
    count.insert(target, 1);
    for &v in order.iter().rev() {
        if v == target {
            continue;
        }
        let c: u128 = g.children(v).iter().map(|c| count.get(c).copied().unwrap_or(0)).sum();
        if c > 0 {
            count.insert(v, c);
        }
    }
    count
}
