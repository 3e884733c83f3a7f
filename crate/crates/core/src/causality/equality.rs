use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::realize::realize_omega;
use crate::error::{Error, Result};
use crate::gaussian::{membership_chain, propagation_matrix, recover_params, sample_params, sigma_of, CovMatrix, MembershipOptions, ParamPoint};
use crate::graph::{is_chain_graph, MixedGraph, Vertex};
use crate::linalg::{self, finite_difference_jacobian, levenberg_marquardt};
use crate::random::trial_seed;

const NOTE: &str = "numerical evidence from sampled parameter points, not a proof of model equality";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualityOptions {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Stop each direction at its first failing trial.
    pub stop_on_failure: bool,
}

impl Default for EqualityOptions {
    fn default() -> Self {
        Self {
            trials: 20,
            tol: 1e-6,
            seed: 42,
            stop_on_failure: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResidual {
    pub trial: usize,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualityReport {
    pub observed: Vec<String>,
    pub hidden: Vec<String>,
    /// Marginals of points on the digraph tested for membership in the
    /// mixed-graph model; the residual is the largest violated partial
    /// covariance (0 when none).
    pub direction_one: Vec<TrialResidual>,
    /// Points of the mixed-graph model reproduced through the digraph; the
    /// residual is the max-abs reconstruction error.
    pub direction_two: Vec<TrialResidual>,
    pub direction_one_passed: bool,
    pub direction_two_passed: bool,
    pub passed: bool,
    pub note: String,
}

/// Index in `d` of every vertex of `g`, matched by label.
fn observed_map(g: &MixedGraph, d: &MixedGraph) -> Result<Vec<Vertex>> {
    g.labels().iter().map(|l| d.vertex(l)).collect()
}

/// Checks `N_V(d) = N(g)` on sampled points, in both directions.
pub fn verify_model_equality(g: &MixedGraph, d: &MixedGraph, trials: usize, tol: f64, seed: u64) -> Result<EqualityReport> {
    verify_model_equality_with(
        g,
        d,
        &EqualityOptions {
            trials,
            tol,
            seed,
            stop_on_failure: false,
        },
    )
}

pub fn verify_model_equality_with(g: &MixedGraph, d: &MixedGraph, opts: &EqualityOptions) -> Result<EqualityReport> {
    if !is_chain_graph(g) {
        return Err(Error::NotChainGraph);
    }
    d.require_digraph()?;
    d.require_acyclic()?;
    let obs = observed_map(g, d)?;
    let hidden: Vec<String> = (0..d.n())
        .filter(|v| !obs.contains(v))
        .map(|v| d.label(v).to_string())
        .collect();

    let trial_one = |t: usize| -> Result<TrialResidual> {
        let p = sample_params(d, trial_seed(opts.seed, 2 * t as u64), 1.0);
        let s = sigma_of(d, &p)?.marginal(g.labels())?;
        let r = membership_chain(g, &s, opts.tol, &MembershipOptions::default())?;
        let residual = r.violations.iter().map(|v| v.value.abs()).fold(0.0, f64::max);
        Ok(TrialResidual {
            trial: t,
            residual,
            passed: r.member,
        })
    };
    let trial_two = |t: usize| -> Result<TrialResidual> {
        let p = sample_params(g, trial_seed(opts.seed, 2 * t as u64 + 1), 1.0);
        let residual = direction_two_residual(g, d, &sigma_of(g, &p)?)?;
        Ok(TrialResidual {
            trial: t,
            residual,
            passed: residual <= opts.tol,
        })
    };
    let (one, two) = if opts.stop_on_failure {
        let one = run_until_failure(opts.trials, trial_one)?;
        let two = if one.iter().all(|r| r.passed) {
            run_until_failure(opts.trials, trial_two)?
        } else {
            Vec::new()
        };
        (one, two)
    } else {
        let one = (0..opts.trials).into_par_iter().map(trial_one).collect::<Result<Vec<_>>>()?;
        let two = (0..opts.trials).into_par_iter().map(trial_two).collect::<Result<Vec<_>>>()?;
        (one, two)
    };
    let one_ok = one.iter().all(|r| r.passed);
    let two_ok = (!two.is_empty() || opts.trials == 0) && two.iter().all(|r| r.passed);
    Ok(EqualityReport {
        observed: g.labels().to_vec(),
        hidden,
        direction_one_passed: one_ok,
        direction_two_passed: two_ok,
        passed: one_ok && two_ok,
        direction_one: one,
        direction_two: two,
        note: NOTE.into(),
    })
}

fn run_until_failure(trials: usize, f: impl Fn(usize) -> Result<TrialResidual>) -> Result<Vec<TrialResidual>> {
    let mut out = Vec::new();
    for t in 0..trials {
        let r = f(t)?;
        let stop = !r.passed;
        out.push(r);
        if stop {
            break;
        }
    }
    Ok(out)
}

/// Cliques of `g` realized by `d` when `d` extends `g`'s directed part by
/// parentless hidden vertices whose children are bidirected cliques.
fn hidden_cliques(g: &MixedGraph, d: &MixedGraph, obs: &[Vertex]) -> Option<Vec<(Vertex, Vec<Vertex>)>> {
    let mut back = vec![None; d.n()];
    for (i, &v) in obs.iter().enumerate() {
        back[v] = Some(i);
    }
    for (a, b) in d.directed_edges() {
        if let (Some(x), Some(y)) = (back[a], back[b]) {
            if !g.has_directed(x, y) {
                return None;
            }
        }
    }
    if g.directed_edges().any(|(x, y)| !d.has_directed(obs[x], obs[y])) {
        return None;
    }
    let mut out = Vec::new();
    for h in (0..d.n()).filter(|&v| back[v].is_none()) {
        if !d.parents(h).is_empty() {
            return None;
        }
        let kids: Option<Vec<Vertex>> = d.children(h).iter().map(|&c| back[c]).collect();
        let kids = kids?;
        out.push((h, kids));
    }
    Some(out)
}

/// Max-abs error of the best reproduction of `sigma` (a point on `g`'s
/// vertices) as the observed marginal of a point on `d`.
///
/// When `d` has the clique-digraph shape the reproduction is constructive:
/// recover `(Λ, Ω)` on `g`, realize `Ω` through the hidden cliques and
/// rebuild. Otherwise the parameters of `d` are fitted by least squares.
pub fn direction_two_residual(g: &MixedGraph, d: &MixedGraph, sigma: &CovMatrix) -> Result<f64> {
    let sigma = sigma.aligned_to(g.labels())?;
    let obs = observed_map(g, d)?;
    if let Some(groups) = hidden_cliques(g, d, &obs) {
        if let Some(r) = constructive(g, d, &obs, &groups, &sigma)? {
            return Ok(r);
        }
    }
    if obs.len() == d.n() {
        let s = sigma.aligned_to(d.labels())?;
        let p = recover_params(d, &s)?;
        let back = sigma_of_unchecked(d, &p);
        return Ok(linalg::max_abs_diff(&back, s.matrix()));
    }
    Ok(fit_digraph(d, &obs, &sigma))
}

fn sigma_of_unchecked(d: &MixedGraph, p: &ParamPoint) -> DMatrix<f64> {
    let order = d.topological_order().expect("acyclic");
    let t = propagation_matrix(d, &order, &p.lambda);
    &t * &p.omega * t.transpose()
}

fn constructive(
    g: &MixedGraph,
    d: &MixedGraph,
    obs: &[Vertex],
    groups: &[(Vertex, Vec<Vertex>)],
    sigma: &CovMatrix,
) -> Result<Option<f64>> {
    let pg = recover_params(g, sigma)?;
    let cliques: Vec<Vec<Vertex>> = groups.iter().map(|(_, c)| c.clone()).collect();
    let real = match realize_omega(g, &cliques, &pg.omega) {
        Ok(r) => r,
        Err(
            Error::NotDecomposable
            | Error::ConvergenceFailure { .. }
            | Error::NotPositiveDefinite(_)
            | Error::InvalidGraph(_)
            | Error::SupportViolation(_),
        ) => return Ok(None),
        Err(e) => return Err(e),
    };
    let n = d.n();
    let mut lambda = DMatrix::zeros(n, n);
    let mut omega = DMatrix::zeros(n, n);
    for (x, y) in g.directed_edges() {
        lambda[(obs[x], obs[y])] = pg.lambda[(x, y)];
    }
    for (i, &v) in obs.iter().enumerate() {
        omega[(v, v)] = real.delta[i];
    }
    for (k, (h, members)) in groups.iter().enumerate() {
        omega[(*h, *h)] = real.delta[g.n() + k];
        for &m in members {
            lambda[(*h, obs[m])] = real.gamma21[(k, m)];
        }
    }
    let full = sigma_of_unchecked(d, &ParamPoint::new(lambda, omega));
    let back = linalg::submatrix(&full, obs, obs);
    Ok(Some(linalg::max_abs_diff(&back, sigma.matrix())))
}

/// Least-squares fit over `d`'s edge coefficients and log error variances.
fn fit_digraph(d: &MixedGraph, obs: &[Vertex], sigma: &CovMatrix) -> f64 {
    let n = d.n();
    let order = d.topological_order().expect("acyclic");
    let edges: Vec<(Vertex, Vertex)> = d.directed_edges().collect();
    let m = obs.len();
    let target: Vec<f64> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).map(|(i, j)| sigma.get(i, j)).collect();
    let resid = |x: &DVector<f64>| {
        let mut lambda = DMatrix::zeros(n, n);
        for (k, &(u, v)) in edges.iter().enumerate() {
            lambda[(u, v)] = x[k];
        }
        let t = propagation_matrix(d, &order, &lambda);
        let w: Vec<f64> = (0..n).map(|v| x[edges.len() + v].exp()).collect();
        let mut r = Vec::with_capacity(target.len());
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                let (a, b) = (obs[i], obs[j]);
                let s: f64 = (0..n).map(|c| t[(a, c)] * w[c] * t[(b, c)]).sum();
                r.push(s - target[k]);
                k += 1;
            }
        }
        DVector::from_vec(r)
    };
    let jac = |x: &DVector<f64>, r: &DVector<f64>| finite_difference_jacobian(&resid, x, r);
    let mut best = f64::INFINITY;
    for start in 0..6u64 {
        let p = sample_params(d, 1000 + start, 1.0);
        let x0 = DVector::from_fn(edges.len() + n, |k, _| {
            if k < edges.len() {
                let (u, v) = edges[k];
                p.lambda[(u, v)]
            } else {
                p.omega[(k - edges.len(), k - edges.len())].ln()
            }
        });
        let out = levenberg_marquardt(&resid, &jac, x0, 1e-12, 500);
        best = best.min(out.max_residual);
        if best <= 1e-12 {
            break;
        }
    }
    best
}
