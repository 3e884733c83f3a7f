//! Chordality of the bidirected part by maximum cardinality search.

use std::collections::VecDeque;

use serde::Serialize;

use super::{MixedGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecomposabilityReport {
    pub decomposable: bool,
    /// Chordless bidirected cycle of length ≥ 4, present iff not decomposable.
    ///
    /// Rotated to start at its smallest vertex and oriented towards the
    /// smaller of that vertex's two cycle neighbours.
    pub certificate: Option<Vec<Vertex>>,
    /// Perfect elimination ordering of `(V, B)`, present iff decomposable.
    pub elimination_ordering: Option<Vec<Vertex>>,
}

/// Maximum cardinality search visiting order; ties go to the smallest index.
fn mcs_order(g: &MixedGraph) -> Vec<Vertex> {
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut numbered = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !numbered[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("an unnumbered vertex remains");
        numbered[v] = true;
        order.push(v);
        for &w in g.siblings(v) {
            if !numbered[w] {
                weight[w] += 1;
            }
        }
    }
    order
}

/// First violation of the perfect-elimination property, as `(v, m, x)` with
/// `v` adjacent to both `m` and `x` but `m`, `x` non-adjacent.
fn peo_violation(g: &MixedGraph, elim: &[Vertex]) -> Option<(Vertex, Vertex, Vertex)> {
    let mut pos = vec![0usize; g.n()];
    for (i, &v) in elim.iter().enumerate() {
        pos[v] = i;
    }
    for &v in elim {
        let later: Vec<Vertex> = g.siblings(v).iter().copied().filter(|&w| pos[w] > pos[v]).collect();
        let Some(&m) = later.iter().min_by_key(|&&w| pos[w]) else {
            continue;
        };
        if let Some(&x) = later.iter().find(|&&x| x != m && !g.has_bidirected(m, x)) {
            return Some((v, m, x));
        }
    }
    None
}

/// Shortest bidirected path from `from` to `to` avoiding the closed
/// neighbourhood of `pivot` (except the endpoints themselves).
fn path_avoiding(g: &MixedGraph, pivot: Vertex, from: Vertex, to: Vertex) -> Option<Vec<Vertex>> {
    let n = g.n();
    let mut blocked = vec![false; n];
    blocked[pivot] = true;
    for &w in g.siblings(pivot) {
        blocked[w] = true;
    }
    blocked[from] = false;
    blocked[to] = false;
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &w in g.siblings(v) {
            if !blocked[w] && !seen[w] {
                seen[w] = true;
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

fn cycle_through(g: &MixedGraph, v: Vertex, m: Vertex, x: Vertex) -> Option<Vec<Vertex>> {
    let path = path_avoiding(g, v, m, x)?;
    let mut cycle = vec![v];
    cycle.extend(path);
    Some(cycle)
}

fn normalize_cycle(mut cycle: Vec<Vertex>) -> Vec<Vertex> {
    let k = cycle.len();
    let start = (0..k).min_by_key(|&i| cycle[i]).unwrap_or(0);
    cycle.rotate_left(start);
    if k > 2 && cycle[k - 1] < cycle[1] {
        cycle[1..].reverse();
    }
    cycle
}

/// Finds some chordless cycle of length ≥ 4 in `(V, B)`, if one exists.
///
/// `hint` is tried first; afterwards every vertex with a non-adjacent pair of
/// neighbours is tried, which finds a cycle whenever the graph is not chordal.
fn chordless_cycle(g: &MixedGraph, hint: Option<(Vertex, Vertex, Vertex)>) -> Option<Vec<Vertex>> {
    if let Some((v, m, x)) = hint {
        if let Some(c) = cycle_through(g, v, m, x) {
            return Some(c);
        }
    }
    for v in 0..g.n() {
        let nb = g.siblings(v);
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if g.has_bidirected(a, b) {
                    continue;
                }
                if let Some(c) = cycle_through(g, v, a, b) {
                    return Some(c);
                }
            }
        }
    }
    None
}

/// Decides whether the bidirected part `(V, B)` is chordal.
pub fn is_decomposable(g: &MixedGraph) -> DecomposabilityReport {
    let mut elim = mcs_order(g);
    elim.reverse();
    match peo_violation(g, &elim) {
        None => DecomposabilityReport {
            decomposable: true,
            certificate: None,
            elimination_ordering: Some(elim),
        },
        Some(hint) => {
            let cycle = chordless_cycle(g, Some(hint))
                .expect("a failed perfect elimination ordering implies a chordless cycle");
            DecomposabilityReport {
                decomposable: false,
                certificate: Some(normalize_cycle(cycle)),
                elimination_ordering: None,
            }
        }
    }
}
