//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::graph::Vertex;

/// Smallest eigenvalue of a symmetric matrix (`+inf` for an empty matrix).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = m.clone().symmetric_eigenvalues();
    ev.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols() && m.clone().cholesky().is_some()
}

/// `m[rows, cols]` in the given orders.
pub fn submatrix(m: &DMatrix<f64>, rows: &[Vertex], cols: &[Vertex]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Determinant of `m[rows, cols]`; the empty minor has determinant 1.
pub fn minor(m: &DMatrix<f64>, rows: &[Vertex], cols: &[Vertex]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    submatrix(m, rows, cols).determinant()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Result of [`levenberg_marquardt`].
#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: DVector<f64>,
    /// Largest absolute residual at `x`.
    pub max_residual: f64,
    pub iterations: usize,
}

/// Forward-difference Jacobian of `f` at `x`.
pub fn finite_difference_jacobian(f: &dyn Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, fx: &DVector<f64>) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(fx.len(), x.len());
    let mut xh = x.clone();
    for j in 0..x.len() {
        let h = 1e-7 * x[j].abs().max(1.0);
        xh[j] = x[j] + h;
        let col = (f(&xh) - fx) / h;
        jac.set_column(j, &col);
        xh[j] = x[j];
    }
    jac
}

/// Minimizes `|f(x)|²` by Levenberg–Marquardt with Nielsen's damping update.
/// Stops once every residual is at most `tol` or after `max_iter` steps.
pub fn levenberg_marquardt(
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    jac: &dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64>,
    x0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> LmOutcome {
    let max_abs = |r: &DVector<f64>| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut x = x0;
    let mut r = f(&x);
    let mut cost = r.norm_squared();
    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut it = 0;
    while it < max_iter && max_abs(&r) > tol && cost.is_finite() {
        it += 1;
        let j = jac(&x, &r);
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * &r;
        if grad.amax() < 1e-300 {
            break;
        }
        if mu < 0.0 {
            mu = 1e-3 * jtj.diagonal().max().max(1e-12);
        }
        let mut a = jtj.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += mu;
        }
        let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        if step.norm() <= 1e-15 * (x.norm() + 1e-15) {
            break;
        }
        let x_new = &x + &step;
        let r_new = f(&x_new);
        let cost_new = r_new.norm_squared();
        let predicted = -(2.0 * step.dot(&grad) + (&j * &step).norm_squared());
        let rho = if predicted > 0.0 { (cost - cost_new) / predicted } else { -1.0 };
        if cost_new.is_finite() && rho > 0.0 {
            x = x_new;
            r = r_new;
            cost = cost_new;
            mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
            if mu > 1e300 {
                break;
            }
        }
    }
    LmOutcome {
        max_residual: max_abs(&r),
        x,
        iterations: it,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lm_solves_rosenbrock_as_least_squares() {
        let f = |x: &DVector<f64>| DVector::from_vec(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let jac = |x: &DVector<f64>, r: &DVector<f64>| finite_difference_jacobian(&f, x, r);
        let out = levenberg_marquardt(&f, &jac, DVector::from_vec(vec![-1.2, 1.0]), 1e-12, 500);
        assert!(out.max_residual <= 1e-12, "{out:?}");
        assert!((out.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn minors_and_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(minor(&m, &[], &[]), 1.0);
        assert!((minor(&m, &[0, 1], &[0, 1]) - 3.0).abs() < 1e-12);
        let (lo, hi) = eigen_range(&m);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        assert!(is_positive_definite(&m));
        assert_eq!(min_eigenvalue(&DMatrix::zeros(0, 0)), f64::INFINITY);
    }
}
