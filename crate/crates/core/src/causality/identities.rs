use nalgebra::DMatrix;
use serde::Serialize;

use super::signflip::sign_flip;
use crate::error::{Error, Result};
use crate::gaussian::{sample_params, sigma_of, ParamPoint};
use crate::graph::{MixedGraph, Vertex, VertexSet};
use crate::linalg;
use crate::random::trial_seed;
use crate::separation::negation_edge_set;

/// `Γ′`: `Λ` with the entries on the negation edge set of `(one, two)`
/// given `a` negated. `Ω` is unchanged.
pub fn gamma_negation(d: &MixedGraph, a: &VertexSet, one: Vertex, two: Vertex, p: &ParamPoint) -> Result<ParamPoint> {
    if a.contains(&one) || a.contains(&two) {
        return Err(Error::BadQuery("the negated pair must lie outside the conditioning set".into()));
    }
    let mut out = p.clone();
    for (x, y) in negation_edge_set(d, a, one, two)? {
        out.lambda[(x, y)] = -out.lambda[(x, y)];
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    Negated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantCheck {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub relation: Relation,
    pub before: f64,
    pub after: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub negated_edges: Vec<(String, String)>,
    pub checks: Vec<DeterminantCheck>,
    pub max_error: f64,
    /// Max-abs gap between `Σ′_{[p].A}` and the sign flip of `Σ_{[p].A}`.
    pub flip_error: f64,
    pub passed: bool,
}

/// Compares determinants of `Σ` at `p` and `Σ′` at `gamma_negation(p)`:
/// `det Σ_{A,A}` is unchanged, `det Σ_{1A,2A}` changes sign and
/// `det Σ_{uA,vA}` is unchanged for every other pair on the cycle. `cycle`
/// lists the cycle in order, so `cycle[0]` and `cycle[1]` play 1 and 2.
pub fn verify_determinant_identities(
    d: &MixedGraph,
    a: &VertexSet,
    cycle: &[Vertex],
    p: &ParamPoint,
    tol: f64,
) -> Result<IdentityReport> {
    if cycle.len() < 2 {
        return Err(Error::BadQuery("cycle needs at least two vertices".into()));
    }
    let (one, two) = (cycle[0], cycle[1]);
    let flipped = gamma_negation(d, a, one, two, p)?;
    let s = sigma_of(d, p)?;
    let s2 = sigma_of(d, &flipped)?;
    let av: Vec<Vertex> = a.iter().copied().collect();
    let with = |x: Vertex| -> Vec<Vertex> { std::iter::once(x).chain(av.iter().copied()).collect() };

    let mut checks = Vec::new();
    let mut push = |rows: Vec<Vertex>, cols: Vec<Vertex>, relation: Relation| {
        let before = linalg::minor(s.matrix(), &rows, &cols);
        let after = linalg::minor(s2.matrix(), &rows, &cols);
        let expected = match relation {
            Relation::Equal => before,
            Relation::Negated => -before,
        };
        checks.push(DeterminantCheck {
            rows: d.labels_of(&rows),
            cols: d.labels_of(&cols),
            relation,
            before,
            after,
            error: (after - expected).abs(),
        });
    };
    push(av.clone(), av.clone(), Relation::Equal);
    push(with(one), with(two), Relation::Negated);
    for i in 0..cycle.len() {
        for j in i..cycle.len() {
            if (i, j) != (0, 1) {
                push(with(cycle[i]), with(cycle[j]), Relation::Equal);
            }
        }
    }
    let block = s.cond_cov_block(cycle, &av)?;
    let block2 = s2.cond_cov_block(cycle, &av)?;
    let flip_error = linalg::max_abs_diff(&block2, &sign_flip(&block));
    let max_error = checks.iter().map(|c| c.error).fold(0.0, f64::max);
    let negated_edges = negation_edge_set(d, a, one, two)?
        .into_iter()
        .map(|(x, y)| (d.label(x).to_string(), d.label(y).to_string()))
        .collect();
    Ok(IdentityReport {
        negated_edges,
        passed: max_error <= tol && flip_error <= tol,
        checks,
        max_error,
        flip_error,
    })
}

/// Worst case of [`verify_determinant_identities`] over sampled points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentitySummary {
    pub trials: usize,
    pub max_error: f64,
    pub flip_max_error: f64,
    pub negated_edges: Vec<(String, String)>,
    pub passed: bool,
}

pub fn check_identities_sampled(
    d: &MixedGraph,
    a: &VertexSet,
    cycle: &[Vertex],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<IdentitySummary> {
    let mut summary = IdentitySummary {
        trials,
        max_error: 0.0,
        flip_max_error: 0.0,
        negated_edges: Vec::new(),
        passed: true,
    };
    for t in 0..trials {
        let p = sample_params(d, trial_seed(seed, t as u64), 1.0);
        let r = verify_determinant_identities(d, a, cycle, &p, tol)?;
        summary.max_error = summary.max_error.max(r.max_error);
        summary.flip_max_error = summary.flip_max_error.max(r.flip_error);
        summary.passed &= r.passed;
        summary.negated_edges = r.negated_edges;
    }
    Ok(summary)
}

/// Whether `a` equals the sign flip of `b` within `tol`.
pub fn is_flip_of(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    linalg::max_abs_diff(a, &sign_flip(b)) <= tol
}
