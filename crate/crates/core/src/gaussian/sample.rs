use nalgebra::DMatrix;
use rand::Rng;

use super::ParamPoint;
use crate::graph::MixedGraph;
use crate::linalg;
use crate::random::{seeded, SeededRng};

/// Knobs of the parameter sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    /// Edge coefficients are drawn from `±[0.1·scale, scale]`.
    pub scale: f64,
    /// Diagonal of `Ω` before the shift, drawn from `[lo, hi]`.
    pub diag_range: (f64, f64),
    /// Off-diagonal entries of `Ω` on `B`, drawn from `±[0.1, 1]·offdiag`.
    pub offdiag: f64,
    /// `Ω` is shifted by a multiple of `I` until this is its smallest eigenvalue.
    pub min_eigenvalue: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            scale: 1.0,
            diag_range: (0.5, 1.5),
            offdiag: 1.0,
            min_eigenvalue: 0.1,
        }
    }
}

fn away_from_zero(rng: &mut SeededRng, scale: f64) -> f64 {
    let mag = rng.gen_range(0.1 * scale..=scale);
    if rng.gen_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Seeded random parameter point supported on `g`.
pub fn sample_params(g: &MixedGraph, seed: u64, scale: f64) -> ParamPoint {
    sample_params_with(g, &mut seeded(seed), &SampleOptions { scale, ..Default::default() })
}

/// Draws `Λ` on `D` and `Ω` on the diagonal plus `B`, then shifts `Ω`'s
/// diagonal so its smallest eigenvalue is at least `min_eigenvalue`.
pub fn sample_params_with(g: &MixedGraph, rng: &mut SeededRng, opts: &SampleOptions) -> ParamPoint {
    let n = g.n();
    let mut lambda = DMatrix::zeros(n, n);
    for (u, v) in g.directed_edges() {
        lambda[(u, v)] = away_from_zero(rng, opts.scale);
    }
    let mut omega = DMatrix::zeros(n, n);
    for v in 0..n {
        omega[(v, v)] = rng.gen_range(opts.diag_range.0..=opts.diag_range.1);
    }
    for (u, v) in g.bidirected_edges() {
        let x = away_from_zero(rng, opts.offdiag);
        omega[(u, v)] = x;
        omega[(v, u)] = x;
    }
    if !g.is_digraph() {
        let lo = linalg::min_eigenvalue(&omega);
        if lo < opts.min_eigenvalue {
            for v in 0..n {
                omega[(v, v)] += opts.min_eigenvalue - lo;
            }
        }
    }
    ParamPoint::new(lambda, omega)
}
