use serde::Serialize;

use super::CovMatrix;
use crate::error::{Error, Result};
use crate::graph::{is_chain_graph, MixedGraph, Vertex, VertexSet};
use crate::separation::is_d_connected;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MembershipOptions {
    /// Largest conditioning set examined. `None` means every subset when the
    /// graph has at most 12 vertices, and sets of size at most 3 otherwise.
    pub max_cond_size: Option<usize>,
}

/// A conditional independence implied by the graph that `s` violates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub u: String,
    pub v: String,
    pub given: Vec<String>,
    /// Partial covariance after scaling `s` to unit diagonal.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub member: bool,
    pub checked: usize,
    pub violations: Vec<Violation>,
}

fn subsets_up_to(pool: &[Vertex], k: usize, f: &mut impl FnMut(&[Vertex]) -> Result<()>) -> Result<()> {
    fn rec(
        pool: &[Vertex],
        start: usize,
        k: usize,
        cur: &mut Vec<Vertex>,
        f: &mut impl FnMut(&[Vertex]) -> Result<()>,
    ) -> Result<()> {
        f(cur)?;
        if cur.len() == k {
            return Ok(());
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            rec(pool, i + 1, k, cur, f)?;
            cur.pop();
        }
        Ok(())
    }
    rec(pool, 0, k, &mut Vec::new(), f)
}

/// Tests whether `s` satisfies every conditional independence of the chain
/// graph `g`: `|σ_{uv.A}| ≤ tol` whenever `u` and `v` are not d-connected
/// given `A`. Zero tests run on the unit-diagonal rescaling of `s`.
pub fn membership_chain(g: &MixedGraph, s: &CovMatrix, tol: f64, opts: &MembershipOptions) -> Result<MembershipReport> {
    if !is_chain_graph(g) {
        return Err(Error::NotChainGraph);
    }
    let s = s.aligned_to(g.labels())?.standardized();
    let n = g.n();
    let cap = opts.max_cond_size.unwrap_or(if n <= 12 { n } else { 3 });
    let mut checked = 0;
    let mut violations = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let pool: Vec<Vertex> = (0..n).filter(|&x| x != u && x != v).collect();
            subsets_up_to(&pool, cap, &mut |a| {
                let given: VertexSet = a.iter().copied().collect();
                if is_d_connected(g, u, v, &given)? {
                    return Ok(());
                }
                checked += 1;
                let value = s.cond_cov(u, v, a)?;
                if value.abs() > tol {
                    violations.push(Violation {
                        u: g.label(u).to_string(),
                        v: g.label(v).to_string(),
                        given: g.labels_of(a),
                        value,
                    });
                }
                Ok(())
            })?;
        }
    }
    Ok(MembershipReport {
        member: violations.is_empty(),
        checked,
        violations,
    })
}
