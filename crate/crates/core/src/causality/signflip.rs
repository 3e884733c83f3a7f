use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;
use crate::random::seeded;

/// Acceptance thresholds for a sign-flip counterexample.
pub const MIN_PHI_EIGENVALUE: f64 = 0.01;
pub const MAX_FLIPPED_EIGENVALUE: f64 = -0.05;

/// Negates entries `(1,2)` and `(2,1)`.
pub fn sign_flip(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = phi.clone();
    if phi.nrows() >= 2 {
        out[(0, 1)] = -phi[(0, 1)];
        out[(1, 0)] = -phi[(1, 0)];
    }
    out
}

/// Unit-diagonal matrix on the `p`-cycle `1 - 2 - ... - p - 1`, with
/// `weights[i]` on the edge between positions `i` and `i + 1 (mod p)`.
pub fn cycle_matrix(weights: &[f64]) -> DMatrix<f64> {
    let p = weights.len();
    let mut m = DMatrix::identity(p, p);
    for (i, &w) in weights.iter().enumerate() {
        let j = (i + 1) % p;
        m[(i, j)] = w;
        m[(j, i)] = w;
    }
    m
}

/// `min(λ_min(Φ) − 0.01, −0.05 − λ_min(Φ^(12)))`; nonnegative iff accepted.
fn margin(phi: &DMatrix<f64>) -> f64 {
    let a = min_eigenvalue(phi) - MIN_PHI_EIGENVALUE;
    let b = MAX_FLIPPED_EIGENVALUE - min_eigenvalue(&sign_flip(phi));
    a.min(b)
}

fn two_weight(p: usize, a: f64, b: f64) -> DMatrix<f64> {
    let mut w = vec![b; p];
    w[0] = a;
    cycle_matrix(&w)
}

/// Finds `Φ ∈ PD(B_p)` with unit diagonal such that `Φ^(12)` has an
/// eigenvalue at most −0.05.
///
/// Grid search over matrices whose `(1,2)` weight is `a` and whose other
/// cycle weights equal `b`, `a, b ∈ (−0.75, 0.75)`, followed by finer grids
/// around the best point; a seeded random search over all `p` weights is the fallback.
pub fn find_sign_flip_counterexample(p: usize) -> Result<DMatrix<f64>> {
    if p < 4 {
        return Err(Error::BadQuery(format!("cycle length must be at least 4, got {p}")));
    }
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let steps = 30;
    for i in 1..steps {
        for j in 1..steps {
            let a = -0.75 + 1.5 * i as f64 / steps as f64;
            let b = -0.75 + 1.5 * j as f64 / steps as f64;
            let m = margin(&two_weight(p, a, b));
            if m > best.0 {
                best = (m, a, b);
            }
        }
    }
    // zoom: rescan a finer grid around the current best point
    let mut h = 1.5 / steps as f64;
    for _ in 0..6 {
        h /= 4.0;
        let (_, a0, b0) = best;
        for da in -8..=8 {
            for db in -8..=8 {
                let (a, b) = (a0 + da as f64 * h, b0 + db as f64 * h);
                if a.abs() >= 0.75 || b.abs() >= 0.75 {
                    continue;
                }
                let m = margin(&two_weight(p, a, b));
                if m > best.0 {
                    best = (m, a, b);
                }
            }
        }
    }
    if best.0 >= 0.0 {
        return Ok(two_weight(p, best.1, best.2));
    }
    let mut rng = seeded(p as u64);
    for _ in 0..200_000 {
        let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.75..0.75)).collect();
        let m = cycle_matrix(&w);
        if margin(&m) >= 0.0 {
            return Ok(m);
        }
    }
    Err(Error::SearchFailure(format!("no sign-flip counterexample found for p = {p}")))
}
