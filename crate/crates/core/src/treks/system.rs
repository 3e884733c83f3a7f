use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::{enumerate_treks_capped, trek_monomial_raw, trek_monomial_eval, Monomial, SparsePoly, Trek, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::gaussian::ParamPoint;
use crate::graph::{MixedGraph, Vertex};

/// Treks `treks[i]` from `sources[i]` to `targets[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrekSystem {
    pub treks: Vec<Trek>,
    pub sources: Vec<Vertex>,
    pub targets: Vec<Vertex>,
    pub perm: Vec<usize>,
    /// Sign of `perm`, as in the Leibniz expansion of `det Σ_{X,Y}`.
    pub sign: i8,
    /// Left sides pairwise disjoint and right sides pairwise disjoint.
    pub no_sided_intersection: bool,
}

struct Candidate {
    trek: Trek,
    lhs: Vec<Vertex>,
    rhs: Vec<Vertex>,
}

fn side_set(side: &[Vertex]) -> Vec<Vertex> {
    let mut s = side.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

fn check_lists(g: &MixedGraph, xs: &[Vertex], ys: &[Vertex]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch(format!("|X| = {} but |Y| = {}", xs.len(), ys.len())));
    }
    for list in [xs, ys] {
        let mut seen = vec![false; g.n()];
        for &x in list {
            if x >= g.n() {
                return Err(Error::BadQuery(format!("vertex index {x} out of range")));
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::BadQuery(format!("vertex {} repeated", g.label(x))));
            }
        }
    }
    Ok(())
}

fn permutations(k: usize) -> Vec<(Vec<usize>, i8)> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out.into_iter()
        .map(|p| {
            let inversions = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            let sign = if inversions % 2 == 0 { 1 } else { -1 };
            (p, sign)
        })
        .collect()
}

/// Backtracking over trek choices. `visit` receives the permutation, its
/// sign, the chosen candidates and the sided-intersection flag.
fn visit_systems(
    g: &MixedGraph,
    xs: &[Vertex],
    ys: &[Vertex],
    nsi_only: bool,
    cap: usize,
    visit: &mut dyn FnMut(&[usize], i8, &[&Candidate], bool) -> ControlFlow<()>,
) -> Result<()> {
    check_lists(g, xs, ys)?;
    g.require_acyclic()?;
    g.require_digraph()?;
    let k = xs.len();
    let mut table: Vec<Vec<Vec<Candidate>>> = Vec::with_capacity(k);
    for &x in xs {
        let mut row = Vec::with_capacity(k);
        for &y in ys {
            let treks = enumerate_treks_capped(g, x, y, cap)?;
            row.push(
                treks
                    .into_iter()
                    .map(|t| Candidate {
                        lhs: side_set(&t.left),
                        rhs: side_set(&t.right),
                        trek: t,
                    })
                    .collect(),
            );
        }
        table.push(row);
    }

    struct State<'a> {
        table: &'a [Vec<Vec<Candidate>>],
        nsi_only: bool,
        cap: usize,
        count: usize,
        left_use: Vec<u32>,
        right_use: Vec<u32>,
        clashes: usize,
    }

    fn rec<'a>(
        st: &mut State<'a>,
        perm: &[usize],
        sign: i8,
        chosen: &mut Vec<&'a Candidate>,
        visit: &mut dyn FnMut(&[usize], i8, &[&Candidate], bool) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>> {
        let i = chosen.len();
        if i == perm.len() {
            st.count += 1;
            if st.count > st.cap {
                return Err(Error::CapExceeded { limit: st.cap });
            }
            return Ok(visit(perm, sign, chosen, st.clashes == 0));
        }
        let table = st.table;
        for cand in &table[i][perm[i]] {
            let clash = cand.lhs.iter().filter(|&&v| st.left_use[v] > 0).count()
                + cand.rhs.iter().filter(|&&v| st.right_use[v] > 0).count();
            if st.nsi_only && clash > 0 {
                continue;
            }
            for &v in &cand.lhs {
                st.left_use[v] += 1;
            }
            for &v in &cand.rhs {
                st.right_use[v] += 1;
            }
            st.clashes += clash;
            chosen.push(cand);
            let flow = rec(st, perm, sign, chosen, visit);
            chosen.pop();
            st.clashes -= clash;
            for &v in &cand.lhs {
                st.left_use[v] -= 1;
            }
            for &v in &cand.rhs {
                st.right_use[v] -= 1;
            }
            if flow?.is_break() {
                return Ok(ControlFlow::Break(()));
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    let mut st = State {
        table: &table,
        nsi_only,
        cap,
        count: 0,
        left_use: vec![0; g.n()],
        right_use: vec![0; g.n()],
        clashes: 0,
    };
    for (perm, sign) in permutations(k) {
        if rec(&mut st, &perm, sign, &mut Vec::with_capacity(k), visit)?.is_break() {
            break;
        }
    }
    Ok(())
}

/// All trek systems from `xs` to `ys` over every bijection, optionally only
/// those without sided intersection.
pub fn trek_systems(g: &MixedGraph, xs: &[Vertex], ys: &[Vertex], require_nsi: bool) -> Result<Vec<TrekSystem>> {
    trek_systems_capped(g, xs, ys, require_nsi, DEFAULT_CAP)
}

pub fn trek_systems_capped(
    g: &MixedGraph,
    xs: &[Vertex],
    ys: &[Vertex],
    require_nsi: bool,
    cap: usize,
) -> Result<Vec<TrekSystem>> {
    let mut out = Vec::new();
    visit_systems(g, xs, ys, require_nsi, cap, &mut |perm, sign, chosen, nsi| {
        out.push(TrekSystem {
            treks: chosen.iter().map(|c| c.trek.clone()).collect(),
            sources: xs.to_vec(),
            targets: ys.to_vec(),
            perm: perm.to_vec(),
            sign,
            no_sided_intersection: nsi,
        });
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// `Σ (−1)^Π ∏ σ(τ)` over systems without sided intersection; as a
/// polynomial this equals `det Σ_{X,Y}`.
pub fn det_via_treks(g: &MixedGraph, xs: &[Vertex], ys: &[Vertex]) -> Result<SparsePoly> {
    let mut poly = SparsePoly::zero();
    let plus = BigRational::from_integer(BigInt::from(1));
    let minus = -plus.clone();
    visit_systems(g, xs, ys, true, DEFAULT_CAP, &mut |_, sign, chosen, _| {
        let m = chosen
            .iter()
            .fold(Monomial::one(), |acc, c| &acc * &trek_monomial_raw(&c.trek));
        poly.add_term(m, if sign > 0 { plus.clone() } else { minus.clone() });
        ControlFlow::Continue(())
    })?;
    Ok(poly)
}

/// Numeric value of [`det_via_treks`] at `p`, without building polynomials.
pub fn det_via_treks_at(g: &MixedGraph, xs: &[Vertex], ys: &[Vertex], p: &ParamPoint) -> Result<f64> {
    let mut total = 0.0;
    visit_systems(g, xs, ys, true, DEFAULT_CAP, &mut |_, sign, chosen, _| {
        let prod: f64 = chosen.iter().map(|c| trek_monomial_eval(&c.trek, p)).product();
        total += f64::from(sign) * prod;
        ControlFlow::Continue(())
    })?;
    Ok(total)
}

/// Whether some system from `xs` to `ys` has no sided intersection.
pub fn has_nsi_system(g: &MixedGraph, xs: &[Vertex], ys: &[Vertex]) -> Result<bool> {
    let mut found = false;
    visit_systems(g, xs, ys, true, DEFAULT_CAP, &mut |_, _, _, _| {
        found = true;
        ControlFlow::Break(())
    })?;
    Ok(found)
}
