//! d-connection on walks, top nodes of d-connecting walks, and the edge set
//! whose coefficients are negated by the sign-flip construction.
//!
//! Walk semantics are exact: walks may revisit vertices and edges. The search
//! runs over states `(vertex, arrived-with-arrowhead)`, which is finite, so a
//! walk exists iff the target is reachable in that state graph.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ancestors, MixedGraph, Vertex, VertexSet};

/// How one walk step traverses its edge, read from the step's origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Mark {
    /// `from -> to`
    Forward,
    /// `from <- to`
    Backward,
    /// `from <-> to`
    Bidirected,
}

impl Mark {
    /// Arrowhead at the step's destination.
    pub fn head_at_end(self) -> bool {
        matches!(self, Mark::Forward | Mark::Bidirected)
    }

    /// Arrowhead at the step's origin.
    pub fn head_at_start(self) -> bool {
        matches!(self, Mark::Backward | Mark::Bidirected)
    }

    fn symbol(self) -> &'static str {
        match self {
            Mark::Forward => "->",
            Mark::Backward => "<-",
            Mark::Bidirected => "<->",
        }
    }
}

/// A walk `v0 m0 v1 m1 ... vk`; vertices and edges may repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Walk {
    pub vertices: Vec<Vertex>,
    pub marks: Vec<Mark>,
}

impl Walk {
    pub fn source(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn target(&self) -> Vertex {
        *self.vertices.last().expect("walks are non-empty")
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Every step is an edge of `g`.
    pub fn is_valid_in(&self, g: &MixedGraph) -> bool {
        self.vertices.len() == self.marks.len() + 1
            && self.marks.iter().enumerate().all(|(i, m)| {
                let (a, b) = (self.vertices[i], self.vertices[i + 1]);
                match m {
                    Mark::Forward => g.has_directed(a, b),
                    Mark::Backward => g.has_directed(b, a),
                    Mark::Bidirected => g.has_bidirected(a, b),
                }
            })
    }

    /// Collider flags for the interior vertices `vertices[1..k]`.
    pub fn colliders(&self) -> Vec<bool> {
        self.marks
            .windows(2)
            .map(|w| w[0].head_at_end() && w[1].head_at_start())
            .collect()
    }

    /// Colliders all in `given`, non-colliders all outside, endpoints outside.
    pub fn is_d_connecting(&self, g: &MixedGraph, given: &VertexSet) -> bool {
        if !self.is_valid_in(g) || self.is_empty() {
            return false;
        }
        if given.contains(&self.source()) || given.contains(&self.target()) {
            return false;
        }
        self.colliders()
            .iter()
            .zip(&self.vertices[1..])
            .all(|(&c, v)| c == given.contains(v))
    }

    /// Parses `"2 -> 3 <- 1 <-> 4"` against the labels of `g`.
    pub fn parse(g: &MixedGraph, text: &str) -> Result<Walk> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() % 2 == 0 {
            return Err(Error::BadQuery(format!("malformed walk `{text}`")));
        }
        let mut vertices = Vec::new();
        let mut marks = Vec::new();
        for (i, t) in tokens.iter().enumerate() {
            if i % 2 == 0 {
                vertices.push(g.vertex(t)?);
            } else {
                marks.push(match *t {
                    "->" => Mark::Forward,
                    "<-" => Mark::Backward,
                    "<->" => Mark::Bidirected,
                    other => return Err(Error::BadQuery(format!("unknown edge mark `{other}`"))),
                });
            }
        }
        let walk = Walk { vertices, marks };
        if !walk.is_valid_in(g) {
            return Err(Error::BadQuery(format!("`{text}` is not a walk of the graph")));
        }
        Ok(walk)
    }

    pub fn display<'a>(&'a self, g: &'a MixedGraph) -> impl fmt::Display + 'a {
        WalkDisplay { walk: self, g }
    }
}

struct WalkDisplay<'a> {
    walk: &'a Walk,
    g: &'a MixedGraph,
}

impl fmt::Display for WalkDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.g.label(self.walk.vertices[0]))?;
        for (m, &v) in self.walk.marks.iter().zip(&self.walk.vertices[1..]) {
            write!(f, " {} {}", m.symbol(), self.g.label(v))?;
        }
        Ok(())
    }
}

/// Outgoing steps of `w`, ordered by neighbour index then mark.
fn steps(g: &MixedGraph, w: Vertex) -> Vec<(Vertex, Mark)> {
    let mut out: Vec<(Vertex, Mark)> = g
        .children(w)
        .iter()
        .map(|&c| (c, Mark::Forward))
        .chain(g.parents(w).iter().map(|&p| (p, Mark::Backward)))
        .chain(g.siblings(w).iter().map(|&s| (s, Mark::Bidirected)))
        .collect();
    out.sort_unstable();
    out
}

fn check_query(g: &MixedGraph, u: Vertex, v: Vertex, given: &VertexSet) -> Result<()> {
    if u >= g.n() || v >= g.n() || given.iter().any(|&a| a >= g.n()) {
        return Err(Error::BadQuery("vertex out of range".into()));
    }
    if u == v {
        return Err(Error::BadQuery("endpoints must be distinct".into()));
    }
    if given.contains(&u) || given.contains(&v) {
        return Err(Error::BadQuery("endpoints must lie outside the conditioning set".into()));
    }
    Ok(())
}

/// State index: `2 * vertex + arrived_with_head`.
fn state(v: Vertex, head: bool) -> usize {
    2 * v + usize::from(head)
}

/// Breadth-first search over walk states starting from `(start, head_in)`,
/// where `head_in = None` marks the walk's source (no collider test there).
fn search(
    g: &MixedGraph,
    start: Vertex,
    head_in: Option<bool>,
    target: Vertex,
    given: &VertexSet,
) -> Option<Walk> {
    let n = g.n();
    const ROOT: usize = usize::MAX;
    // prev[s] = (previous state or ROOT, mark used to enter s)
    let mut prev: Vec<Option<(usize, Mark)>> = vec![None; 2 * n];
    let mut queue: VecDeque<(Vertex, Option<bool>, usize)> = VecDeque::new();
    queue.push_back((start, head_in, ROOT));

    let rebuild = |prev: &[Option<(usize, Mark)>], mut s: usize| {
        let mut vertices = vec![s / 2];
        let mut marks = Vec::new();
        while let Some((p, m)) = prev[s] {
            marks.push(m);
            if p == ROOT {
                vertices.push(start);
                break;
            }
            vertices.push(p / 2);
            s = p;
        }
        vertices.reverse();
        marks.reverse();
        Walk { vertices, marks }
    };

    while let Some((w, head, id)) = queue.pop_front() {
        for (x, m) in steps(g, w) {
            if let Some(h) = head {
                let collider = h && m.head_at_start();
                if collider != given.contains(&w) {
                    continue;
                }
            }
            let s = state(x, m.head_at_end());
            if prev[s].is_some() {
                continue;
            }
            prev[s] = Some((id, m));
            if x == target {
                return Some(rebuild(&prev, s));
            }
            queue.push_back((x, Some(m.head_at_end()), s));
        }
    }
    None
}

/// Whether some walk from `u` to `v` is d-connecting given `given`.
///
/// Works on digraphs and mixed graphs (bidirected edges carry arrowheads at
/// both ends). On success the witness is a shortest walk in the state graph,
/// ties broken by vertex declaration order.
pub fn d_connected(g: &MixedGraph, u: Vertex, v: Vertex, given: &VertexSet) -> Result<Option<Walk>> {
    check_query(g, u, v, given)?;
    Ok(search(g, u, None, v, given))
}

pub fn is_d_connected(g: &MixedGraph, u: Vertex, v: Vertex, given: &VertexSet) -> Result<bool> {
    d_connected(g, u, v, given).map(|w| w.is_some())
}

/// Top nodes of all walks from `u` to `v` that are d-connecting given `given`.
///
/// The top of such a walk is the top of its initial trek, which runs from `u`
/// to the first vertex of `given ∪ {v}` on the walk. Digraphs only.
pub fn tops(g: &MixedGraph, u: Vertex, v: Vertex, given: &VertexSet) -> Result<VertexSet> {
    g.require_digraph()?;
    check_query(g, u, v, given)?;
    let mut stop = given.clone();
    stop.insert(v);
    let up = ancestors(g, &VertexSet::from([u]), &stop);

    let mut out = VertexSet::new();
    // The whole walk may be u <- ... <- v.
    if g.children(v).iter().any(|c| up.contains(c)) {
        out.insert(v);
    }
    let mut continues: Vec<Option<bool>> = vec![None; g.n()];
    for &t in &up {
        // Descend from t through vertices outside given ∪ {v}.
        let mut seen = vec![false; g.n()];
        let mut queue = VecDeque::from([t]);
        let mut hits = VertexSet::new();
        while let Some(w) = queue.pop_front() {
            for &c in g.children(w) {
                if stop.contains(&c) {
                    hits.insert(c);
                } else if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        let ok = hits.contains(&v)
            || hits.iter().filter(|f| given.contains(f)).any(|&f| {
                // f is a collider; the walk leaves it against a parent edge.
                g.parents(f).iter().any(|&y| {
                    if y == v {
                        return true;
                    }
                    if given.contains(&y) {
                        return false;
                    }
                    *continues[y].get_or_insert_with(|| search(g, y, Some(false), v, given).is_some())
                })
            });
        if ok {
            out.insert(t);
        }
    }
    Ok(out)
}

/// Edges `x -> y` with `x` a top node of `(one, two)` given `given` and `y` an
/// ancestor of `one` outside `given` that is not itself a top node.
pub fn negation_edge_set(
    g: &MixedGraph,
    given: &VertexSet,
    one: Vertex,
    two: Vertex,
) -> Result<Vec<(Vertex, Vertex)>> {
    let top = tops(g, one, two, given)?;
    let an = ancestors(g, &VertexSet::from([one]), given);
    Ok(g.directed_edges()
        .filter(|(x, y)| top.contains(x) && an.contains(y) && !top.contains(y))
        .collect())
}


#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use crate::graph::canonical_dag;
    use crate::random::{random_dag, random_mixed, seeded};

    fn two_root_dag() -> MixedGraph {
        MixedGraph::from_labels(
            &["1", "2", "3", "4", "5"],
            &[("1", "3"), ("1", "4"), ("2", "3"), ("2", "5"), ("3", "4"), ("4", "5")],
            &[],
        )
        .unwrap()
    }

    fn cycle4_dag() -> MixedGraph {
        let g = MixedGraph::from_labels(
            &["1", "2", "3", "4"],
            &[],
            &[("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")],
        )
        .unwrap();
        canonical_dag(&g).unwrap().0
    }

    #[test]
    fn example_c_walk_and_tops() {
        let g = two_root_dag();
        let a = g.vertex_set(&["3", "5"]).unwrap();
        let (two, four) = (g.vertex("2").unwrap(), g.vertex("4").unwrap());
        let w = d_connected(&g, two, four, &a).unwrap().expect("connected");
        assert!(w.is_d_connecting(&g, &a));
        let known_walk = Walk::parse(&g, "2 -> 3 <- 1 -> 4").unwrap();
        assert!(known_walk.is_d_connecting(&g, &a));
        assert_eq!(walk_top(&known_walk, &a), two);
        assert_eq!(tops(&g, two, four, &a).unwrap(), VertexSet::from([two]));
    }

    #[test]
    fn example_d_needs_a_non_path_walk() {
        let g = two_root_dag();
        let a = g.vertex_set(&["5"]).unwrap();
        let (two, four) = (g.vertex("2").unwrap(), g.vertex("4").unwrap());
        assert!(!Walk::parse(&g, "2 -> 3 <- 1 -> 4").unwrap().is_d_connecting(&g, &a));
        assert!(Walk::parse(&g, "2 -> 3 -> 4 -> 5 <- 4").unwrap().is_d_connecting(&g, &a));
        assert!(is_d_connected(&g, two, four, &a).unwrap());
        assert_eq!(tops(&g, two, four, &a).unwrap(), VertexSet::from([two]));
    }

    #[test]
    fn isolated_vertices_are_separated() {
        let g = MixedGraph::from_labels(&["a", "b", "c"], &[], &[]).unwrap();
        for given in [VertexSet::new(), VertexSet::from([2])] {
            assert!(!is_d_connected(&g, 0, 1, &given).unwrap());
        }
    }

    #[test]
    fn bad_queries() {
        let g = two_root_dag();
        assert!(matches!(d_connected(&g, 0, 0, &VertexSet::new()), Err(Error::BadQuery(_))));
        assert!(matches!(d_connected(&g, 0, 1, &VertexSet::from([0])), Err(Error::BadQuery(_))));
        let m = MixedGraph::from_labels(&["a", "b"], &[], &[("a", "b")]).unwrap();
        assert_eq!(tops(&m, 0, 1, &VertexSet::new()).unwrap_err(), Error::NotDigraph);
    }

    #[test]
    fn mixed_graph_extended_colliders() {
        // 1 -> 3 <-> 4 <- 2: 3 and 4 are colliders on the only walk from 1 to 2.
        let g = MixedGraph::from_labels(&["1", "2", "3", "4"], &[("1", "3"), ("2", "4")], &[("3", "4")]).unwrap();
        let s = |l: &[&str]| g.vertex_set(l).unwrap();
        assert!(!is_d_connected(&g, 0, 1, &s(&[])).unwrap());
        assert!(!is_d_connected(&g, 0, 1, &s(&["3"])).unwrap());
        assert!(is_d_connected(&g, 0, 1, &s(&["3", "4"])).unwrap());
        assert!(is_d_connected(&g, 0, 3, &s(&["3"])).unwrap());
        assert!(!is_d_connected(&g, 0, 3, &s(&[])).unwrap());
    }

    #[test]
    fn cycle_tops_and_negation_set() {
        let d = cycle4_dag();
        let (one, two) = (d.vertex("1").unwrap(), d.vertex("2").unwrap());
        let h12 = d.vertex("h{1,2}").unwrap();
        let none = VertexSet::new();
        assert_eq!(tops(&d, one, two, &none).unwrap(), VertexSet::from([h12]));
        assert_eq!(brute_tops(&d, one, two, &none, 10), VertexSet::from([h12]));
        assert_eq!(negation_edge_set(&d, &none, one, two).unwrap(), vec![(h12, one)]);
    }

    #[test]
    fn triangle_clique_digraph_negation_set() {
        let g = MixedGraph::from_labels(&["1", "2", "3"], &[], &[("1", "2"), ("2", "3"), ("1", "3")]).unwrap();
        let (d, _) = crate::graph::clique_digraph(&g).unwrap();
        let none = VertexSet::new();
        let top = tops(&d, 0, 1, &none).unwrap();
        assert_eq!(top, brute_tops(&d, 0, 1, &none, 8));
        let an1 = ancestors(&d, &VertexSet::from([0]), &none);
        let expect: Vec<(Vertex, Vertex)> = d
            .directed_edges()
            .filter(|(x, y)| top.contains(x) && an1.contains(y) && !top.contains(y))
            .collect();
        let labels: Vec<String> = top.iter().map(|&t| d.label(t).to_string()).collect();
        assert_eq!(labels, vec!["h{1,2}", "h{1,2,3}"]);
        assert_eq!(negation_edge_set(&d, &none, 0, 1).unwrap(), expect);
        assert_eq!(expect.len(), 2);
    }

    #[test]
    fn empty_tops_give_empty_negation_set() {
        let g = MixedGraph::from_labels(&["1", "2", "3"], &[("3", "1")], &[]).unwrap();
        let none = VertexSet::new();
        assert!(tops(&g, 0, 1, &none).unwrap().is_empty());
        assert!(negation_edge_set(&g, &none, 0, 1).unwrap().is_empty());
    }

    fn all_subsets(n: usize, skip: &[Vertex]) -> Vec<VertexSet> {
        let free: Vec<Vertex> = (0..n).filter(|v| !skip.contains(v)).collect();
        (0..1u32 << free.len())
            .map(|mask| (0..free.len()).filter(|i| mask >> i & 1 == 1).map(|i| free[i]).collect())
            .collect()
    }

    #[test]
    fn state_search_matches_walk_enumeration() {
        let mut rng = seeded(7);
        for trial in 0..60 {
            let n = 3 + trial % 4;
            let g = if trial % 2 == 0 {
                random_dag(&mut rng, n, 8)
            } else {
                random_mixed(&mut rng, n, 5, 3)
            };
            for u in 0..n {
                for v in 0..n {
                    if u == v {
                        continue;
                    }
                    for a in all_subsets(n, &[u, v]) {
                        let fast = d_connected(&g, u, v, &a).unwrap();
                        let slow = brute_connected(&g, u, v, &a, 2 * n);
                        assert_eq!(fast.is_some(), slow, "graph {g:?} u={u} v={v} A={a:?}");
                        if let Some(w) = fast {
                            assert!(w.is_d_connecting(&g, &a));
                            assert_eq!((w.source(), w.target()), (u, v));
                        }
                        assert_eq!(slow, is_d_connected(&g, v, u, &a).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn tops_match_walk_enumeration_and_are_ancestral() {
        let mut rng = seeded(11);
        for trial in 0..40 {
            let n = 3 + trial % 3;
            let g = random_dag(&mut rng, n, 8);
            for u in 0..n {
                for v in 0..n {
                    if u == v {
                        continue;
                    }
                    for a in all_subsets(n, &[u, v]) {
                        let fast = tops(&g, u, v, &a).unwrap();
                        let slow = brute_tops(&g, u, v, &a, 3 * n);
                        assert_eq!(fast, slow, "graph {g:?} u={u} v={v} A={a:?}");
                        assert!(fast.is_disjoint(&a));
                        // The target can be a top (walk u <- ... <- v) without its
                        // ancestors being tops, so ancestrality is checked for the
                        // remaining tops within the subgraph avoiding A and v.
                        let mut av = a.clone();
                        av.insert(v);
                        let mut rest = fast.clone();
                        rest.remove(&v);
                        assert!(ancestors(&g, &rest, &av).is_subset(&fast));
                    }
                }
            }
        }
    }
}
