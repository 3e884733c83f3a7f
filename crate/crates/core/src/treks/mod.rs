//! Treks, the trek rule and determinant expansion over trek systems.
//!
//! Symbolic results are exact [`SparsePoly`]s over the indeterminates
//! `ω_tt` and `λ_uv`; numeric paths evaluate the same sums at a
//! [`ParamPoint`]. Only digraphs are handled.

mod poly;
mod system;

pub use poly::{Monomial, SparsePoly, Var};
pub use system::{
    det_via_treks, det_via_treks_at, has_nsi_system, trek_systems, trek_systems_capped, TrekSystem,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::ParamPoint;
use crate::graph::{ancestors, count_paths_into, MixedGraph, Vertex, VertexSet};

/// Default limit on the number of treks or systems produced by one call.
pub const DEFAULT_CAP: usize = 1_000_000;

/// Two directed paths out of a common top. `left` runs from the top to the
/// source, `right` from the top to the target; both start with `top`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Trek {
    pub top: Vertex,
    pub left: Vec<Vertex>,
    pub right: Vec<Vertex>,
}

impl Trek {
    pub fn trivial(v: Vertex) -> Self {
        Self {
            top: v,
            left: vec![v],
            right: vec![v],
        }
    }

    pub fn source(&self) -> Vertex {
        *self.left.last().expect("nonempty side")
    }

    pub fn target(&self) -> Vertex {
        *self.right.last().expect("nonempty side")
    }

    pub fn num_edges(&self) -> usize {
        self.left.len() + self.right.len() - 2
    }

    pub fn is_valid_in(&self, g: &MixedGraph) -> bool {
        let side_ok = |s: &[Vertex]| s.first() == Some(&self.top) && s.windows(2).all(|w| g.has_directed(w[0], w[1]));
        side_ok(&self.left) && side_ok(&self.right)
    }

    /// Edges of both sides, left first, each in the direction of the graph.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.left
            .windows(2)
            .chain(self.right.windows(2))
            .map(|w| (w[0], w[1]))
    }

    /// Walk notation such as `3 <- 1 -> 4 -> 5`.
    pub fn display(&self, g: &MixedGraph) -> String {
        let mut out = String::new();
        for (i, &v) in self.left.iter().rev().enumerate() {
            if i > 0 {
                out.push_str(" <- ");
            }
            out.push_str(g.label(v));
        }
        for &v in &self.right[1..] {
            out.push_str(" -> ");
            out.push_str(g.label(v));
        }
        out
    }
}

/// `ω_tt ∏ λ_xy` over all edges of the trek, repeated edges squared.
pub fn trek_monomial(t: &Trek) -> SparsePoly {
    SparsePoly::from_monomial(trek_monomial_raw(t))
}

pub(crate) fn trek_monomial_raw(t: &Trek) -> Monomial {
    let mut m = Monomial::var(Var::Omega(t.top));
    for (x, y) in t.edges() {
        m.mul_var(Var::Lambda(x, y));
    }
    m
}

pub fn trek_monomial_eval(t: &Trek, p: &ParamPoint) -> f64 {
    t.edges().fold(p.omega[(t.top, t.top)], |acc, (x, y)| acc * p.lambda[(x, y)])
}

/// All directed paths from `from` to `to`, in lexicographic order.
fn paths(g: &MixedGraph, from: Vertex, to: Vertex, reach: &VertexSet) -> Vec<Vec<Vertex>> {
    fn rec(g: &MixedGraph, to: Vertex, reach: &VertexSet, cur: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
        let w = *cur.last().expect("nonempty");
        if w == to {
            out.push(cur.clone());
            return;
        }
        for &c in g.children(w) {
            if reach.contains(&c) {
                cur.push(c);
                rec(g, to, reach, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(g, to, reach, &mut vec![from], &mut out);
    out
}

/// Number of treks from `u` to `v`, computed from path counts.
pub fn count_treks(g: &MixedGraph, u: Vertex, v: Vertex) -> Result<u128> {
    g.require_acyclic()?;
    g.require_digraph()?;
    let cu = count_paths_into(g, u);
    let cv = count_paths_into(g, v);
    Ok(cu
        .iter()
        .filter_map(|(t, a)| cv.get(t).map(|b| a.saturating_mul(*b)))
        .fold(0u128, u128::saturating_add))
}

/// Every trek from `u` to `v`, ordered by top and then by the two paths.
pub fn enumerate_treks(g: &MixedGraph, u: Vertex, v: Vertex) -> Result<Vec<Trek>> {
    enumerate_treks_capped(g, u, v, DEFAULT_CAP)
}

pub fn enumerate_treks_capped(g: &MixedGraph, u: Vertex, v: Vertex, cap: usize) -> Result<Vec<Trek>> {
    if u >= g.n() || v >= g.n() {
        return Err(Error::BadQuery(format!("vertex index out of range for {} vertices", g.n())));
    }
    if count_treks(g, u, v)? > cap as u128 {
        return Err(Error::CapExceeded { limit: cap });
    }
    let none = VertexSet::new();
    let an_u = ancestors(g, &VertexSet::from([u]), &none);
    let an_v = ancestors(g, &VertexSet::from([v]), &none);
    let mut out = Vec::new();
    for &t in an_u.intersection(&an_v) {
        let left = paths(g, t, u, &an_u);
        let right = paths(g, t, v, &an_v);
        for l in &left {
            for r in &right {
                out.push(Trek {
                    top: t,
                    left: l.clone(),
                    right: r.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Symbolic covariance matrix `σ_uv = Σ_τ σ(τ)` of a digraph.
///
/// Computed through path polynomials `P_t(u) = Σ_{paths t→u} ∏ λ`, so that
/// `σ_uv = Σ_t ω_tt P_t(u) P_t(v)`, which is the trek sum grouped by top.
pub fn trek_rule_sigma(g: &MixedGraph) -> Result<Vec<Vec<SparsePoly>>> {
    let order = g.require_acyclic()?;
    g.require_digraph()?;
    let n = g.n();
    // path[t][u]
    let mut path = vec![vec![SparsePoly::zero(); n]; n];
    for t in 0..n {
        for &u in &order {
            let mut acc = if u == t { SparsePoly::one() } else { SparsePoly::zero() };
            for &w in g.parents(u) {
                if !path[t][w].is_zero() {
                    acc = &acc + &(&path[t][w] * &SparsePoly::lambda(w, u));
                }
            }
            path[t][u] = acc;
        }
    }
    let mut sigma = vec![vec![SparsePoly::zero(); n]; n];
    for u in 0..n {
        for v in u..n {
            let mut s = SparsePoly::zero();
            for t in 0..n {
                if !path[t][u].is_zero() && !path[t][v].is_zero() {
                    s = &s + &(&SparsePoly::omega(t) * &(&path[t][u] * &path[t][v]));
                }
            }
            sigma[v][u] = s.clone();
            sigma[u][v] = s;
        }
    }
    Ok(sigma)
}
