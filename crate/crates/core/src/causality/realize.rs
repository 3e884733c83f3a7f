use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{is_decomposable, MixedGraph, Vertex};
use crate::linalg::{self, finite_difference_jacobian, levenberg_marquardt};
use crate::random::seeded;

/// Largest reconstruction error accepted by [`realize_omega`].
pub const REALIZE_TOL: f64 = 1e-6;

/// `Ω = Δ₁₁ + Γ₂₁ᵀ Δ₂₂ Γ₂₁` with one hidden vertex per clique.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationResult {
    /// Observed members of each hidden vertex, in the order of `gamma21`'s rows.
    pub cliques: Vec<Vec<Vertex>>,
    /// Row `h` holds the coefficients from hidden vertex `h` to the observed ones.
    #[serde(serialize_with = "rows")]
    pub gamma21: DMatrix<f64>,
    /// Error variances, observed vertices first, then hidden ones.
    pub delta: Vec<f64>,
    pub residual: f64,
}

fn rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        seq.serialize_element(&m.row(i).iter().copied().collect::<Vec<_>>())?;
    }
    seq.end()
}

impl RealizationResult {
    /// `Δ₁₁ + Γ₂₁ᵀ Δ₂₂ Γ₂₁`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.gamma21.ncols();
        let k = self.gamma21.nrows();
        let d1 = DMatrix::from_diagonal(&DVector::from_row_slice(&self.delta[..n]));
        let d2 = DMatrix::from_diagonal(&DVector::from_row_slice(&self.delta[n..n + k]));
        d1 + self.gamma21.transpose() * d2 * &self.gamma21
    }
}

fn check_inputs(g: &MixedGraph, cliques: &[Vec<Vertex>], omega: &DMatrix<f64>) -> Result<()> {
    let n = g.n();
    if omega.shape() != (n, n) {
        return Err(Error::SizeMismatch(format!("omega is {:?}, graph has {n} vertices", omega.shape())));
    }
    for i in 0..n {
        for j in 0..n {
            if omega[(i, j)] != omega[(j, i)] {
                return Err(Error::SupportViolation("omega is not symmetric".into()));
            }
            if i != j && omega[(i, j)] != 0.0 && !g.has_bidirected(i, j) {
                return Err(Error::SupportViolation(format!(
                    "omega[{}, {}] is nonzero without a bidirected edge",
                    g.label(i),
                    g.label(j)
                )));
            }
        }
    }
    if !linalg::is_positive_definite(omega) {
        return Err(Error::NotPositiveDefinite("omega".into()));
    }
    for c in cliques {
        let complete = c.iter().enumerate().all(|(i, &a)| c[i + 1..].iter().all(|&b| g.has_bidirected(a, b)));
        if c.len() < 2 || !complete {
            return Err(Error::InvalidGraph(format!("{:?} is not a bidirected clique of size ≥ 2", g.labels_of(c))));
        }
    }
    Ok(())
}

/// Writes `Ω ∈ PD(B)` as `Δ₁₁ + Γ₂₁ᵀ Δ₂₂ Γ₂₁` where hidden vertex `h` points
/// into the members of `cliques[h]`.
///
/// Vertices are peeled off along a perfect elimination ordering. A
/// simplicial `v` with remaining neighbours `N` and column `b = Ω[N, v]` is
/// given a hidden parent on `{v} ∪ N` with `γ_v = c`, `γ_N = b / c` and
/// `δ_h = 1`. Any `c²` strictly between `bᵀ S⁻¹ b` and `ω_vv`, with `S` the
/// remaining block, leaves `δ_v > 0` and a positive definite remainder on
/// the same pattern; the midpoint is used. When the supplied cliques do not
/// cover every elimination step, a least-squares fit is attempted instead.
pub fn realize_omega(g: &MixedGraph, cliques: &[Vec<Vertex>], omega: &DMatrix<f64>) -> Result<RealizationResult> {
    check_inputs(g, cliques, omega)?;
    let report = is_decomposable(g);
    let Some(elim) = report.elimination_ordering else {
        return Err(Error::NotDecomposable);
    };
    match staged(g, cliques, omega, &elim) {
        Some(r) if r.residual <= REALIZE_TOL => Ok(r),
        _ => fit(g, cliques, omega),
    }
}

fn staged(g: &MixedGraph, cliques: &[Vec<Vertex>], omega: &DMatrix<f64>, elim: &[Vertex]) -> Option<RealizationResult> {
    let n = g.n();
    let k = cliques.len();
    let mut m = omega.clone();
    let mut alive = vec![true; n];
    let mut used = vec![false; k];
    let mut gamma = DMatrix::zeros(k, n);
    let mut delta = vec![1.0; n + k];
    for &v in elim {
        alive[v] = false;
        let nb: Vec<Vertex> = g
            .siblings(v)
            .iter()
            .copied()
            .filter(|&w| alive[w] && m[(v, w)] != 0.0)
            .collect();
        if nb.is_empty() {
            delta[v] = m[(v, v)];
            continue;
        }
        let covers = |c: &Vec<Vertex>| c.contains(&v) && nb.iter().all(|w| c.contains(w));
        let h = (0..k)
            .filter(|&h| !used[h] && covers(&cliques[h]))
            .min_by_key(|&h| cliques[h].len())?;
        used[h] = true;
        let rest: Vec<Vertex> = (0..n).filter(|&w| alive[w]).collect();
        let s = linalg::submatrix(&m, &rest, &rest);
        let b = linalg::submatrix(&m, &rest, &[v]);
        let q = (b.transpose() * s.cholesky()?.solve(&b))[(0, 0)];
        let c2 = q + 0.5 * (m[(v, v)] - q);
        if c2.is_nan() || c2 <= 0.0 {
            return None;
        }
        let c = c2.sqrt();
        gamma[(h, v)] = c;
        for (i, &w) in rest.iter().enumerate() {
            if b[(i, 0)] != 0.0 {
                gamma[(h, w)] = b[(i, 0)] / c;
            }
        }
        for (i, &a) in rest.iter().enumerate() {
            for (j, &bb) in rest.iter().enumerate() {
                m[(a, bb)] -= b[(i, 0)] * b[(j, 0)] / c2;
            }
        }
        delta[v] = m[(v, v)] - c2;
    }
    let mut r = RealizationResult {
        cliques: cliques.to_vec(),
        gamma21: gamma,
        delta,
        residual: 0.0,
    };
    r.residual = linalg::max_abs_diff(&r.reconstruct(), omega);
    Some(r)
}

/// Least-squares fit of the off-diagonal pattern with `δ_h = 1`; the
/// observed `δ_v` absorb the diagonal and must stay positive.
fn fit(g: &MixedGraph, cliques: &[Vec<Vertex>], omega: &DMatrix<f64>) -> Result<RealizationResult> {
    let n = g.n();
    let k = cliques.len();
    let slots: Vec<(usize, Vertex)> = cliques
        .iter()
        .enumerate()
        .flat_map(|(h, c)| c.iter().map(move |&v| (h, v)))
        .collect();
    let pairs: Vec<(Vertex, Vertex)> = g.bidirected_edges().collect();
    let gamma_of = |x: &DVector<f64>| {
        let mut gm = DMatrix::zeros(k, n);
        for (i, &(h, v)) in slots.iter().enumerate() {
            gm[(h, v)] = x[i];
        }
        gm
    };
    let floor: Vec<f64> = (0..n).map(|v| 1e-3 * omega[(v, v)]).collect();
    let resid = |x: &DVector<f64>| {
        let gm = gamma_of(x);
        let low = gm.transpose() * &gm;
        let mut r: Vec<f64> = pairs.iter().map(|&(u, v)| low[(u, v)] - omega[(u, v)]).collect();
        for v in 0..n {
            let d = omega[(v, v)] - low[(v, v)];
            r.push((floor[v] - d).max(0.0));
        }
        DVector::from_vec(r)
    };
    let jac = |x: &DVector<f64>, r: &DVector<f64>| finite_difference_jacobian(&resid, x, r);
    let mut rng = seeded(0x5eed);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..8 {
        let x0 = DVector::from_fn(slots.len(), |_, _| rng.gen_range(-0.5..0.5));
        let out = levenberg_marquardt(&resid, &jac, x0, 1e-12, 400);
        if best.as_ref().is_none_or(|(b, _)| out.max_residual < *b) {
            best = Some((out.max_residual, out.x));
        }
        if best.as_ref().is_some_and(|(b, _)| *b <= 1e-12) {
            break;
        }
    }
    let (_, x) = best.expect("at least one start");
    let gm = gamma_of(&x);
    let low = gm.transpose() * &gm;
    let mut delta = vec![1.0; n + k];
    for v in 0..n {
        delta[v] = omega[(v, v)] - low[(v, v)];
    }
    let mut r = RealizationResult {
        cliques: cliques.to_vec(),
        gamma21: gm,
        delta,
        residual: 0.0,
    };
    r.residual = linalg::max_abs_diff(&r.reconstruct(), omega);
    if r.residual <= REALIZE_TOL && r.delta.iter().all(|&d| d > 0.0) {
        Ok(r)
    } else {
        Err(Error::ConvergenceFailure { best_residual: r.residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::sample_params;
    use crate::graph::bidirected_cliques;
    use crate::random::{random_chain_graph, BlockStructure};

    fn check(r: &RealizationResult, omega: &DMatrix<f64>) {
        assert!(r.residual <= REALIZE_TOL);
        assert!(linalg::max_abs_diff(&r.reconstruct(), omega) <= REALIZE_TOL);
        assert!(r.delta.iter().all(|&d| d > 0.0), "{:?}", r.delta);
        for (h, c) in r.cliques.iter().enumerate() {
            for v in 0..r.gamma21.ncols() {
                if !c.contains(&v) {
                    assert_eq!(r.gamma21[(h, v)], 0.0);
                }
            }
        }
    }

    #[test]
    fn diagonal_omega_needs_no_hidden_coefficients() {
        let g = MixedGraph::from_labels(&["a", "b"], &[], &[("a", "b")]).unwrap();
        let omega = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let r = realize_omega(&g, &bidirected_cliques(&g, 2), &omega).unwrap();
        check(&r, &omega);
        assert!(r.gamma21.iter().all(|&x| x == 0.0));
        assert_eq!(&r.delta[..2], &[2.0, 3.0]);
    }

    #[test]
    fn single_edge_closed_form() {
        let g = MixedGraph::from_labels(&["1", "2"], &[], &[("1", "2")]).unwrap();
        let omega = DMatrix::from_row_slice(2, 2, &[1.5, -0.9, -0.9, 0.8]);
        let r = realize_omega(&g, &[vec![0, 1]], &omega).unwrap();
        check(&r, &omega);
        assert!(r.residual < 1e-15);
        // the closed form: c² between ω12²/ω11 and ω22 on the eliminated vertex
        let c = r.gamma21[(0, 0)];
        assert!((r.gamma21[(0, 1)] * c - (-0.9)).abs() < 1e-15);
    }

    #[test]
    fn random_decomposable_patterns() {
        let mut rng = seeded(404);
        for seed in 0..40 {
            let g = random_chain_graph(&mut rng, 5, BlockStructure::Decomposable, 0.0);
            let omega = sample_params(&g, seed, 1.0).omega;
            let r = realize_omega(&g, &bidirected_cliques(&g, 2), &omega).unwrap();
            check(&r, &omega);
        }
    }

    #[test]
    fn single_clique_pattern_uses_the_fit() {
        // Only the maximal clique of a triangle: the one-factor model, which
        // contains this matrix (all partial correlations positive).
        let g = MixedGraph::from_labels(&["a", "b", "c"], &[], &[("a", "b"), ("b", "c"), ("a", "c")]).unwrap();
        let omega = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.2, 0.3, 1.0, 0.4, 0.2, 0.4, 1.0]);
        let r = realize_omega(&g, &[vec![0, 1, 2]], &omega).unwrap();
        check(&r, &omega);
        // a sign pattern no single factor can produce
        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.3, 0.3, 1.0, -0.3, 0.3, -0.3, 1.0]);
        assert!(matches!(
            realize_omega(&g, &[vec![0, 1, 2]], &bad),
            Err(Error::ConvergenceFailure { .. })
        ));
        let r = realize_omega(&g, &bidirected_cliques(&g, 2), &bad).unwrap();
        check(&r, &bad);
    }

    #[test]
    fn input_errors() {
        let cyc = MixedGraph::from_labels(
            &["1", "2", "3", "4"],
            &[],
            &[("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")],
        )
        .unwrap();
        let omega = crate::causality::cycle_matrix(&[0.2, 0.2, 0.2, 0.2]);
        assert_eq!(realize_omega(&cyc, &[], &omega).unwrap_err(), Error::NotDecomposable);
        let g = MixedGraph::from_labels(&["a", "b"], &[], &[]).unwrap();
        let omega = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 1.0]);
        assert!(matches!(realize_omega(&g, &[], &omega), Err(Error::SupportViolation(_))));
        let g = MixedGraph::from_labels(&["a", "b"], &[], &[("a", "b")]).unwrap();
        assert!(matches!(realize_omega(&g, &[vec![0]], &omega), Err(Error::InvalidGraph(_))));
    }
}
