use nalgebra::DMatrix;

use super::{CovMatrix, ParamPoint};
use crate::error::{Error, Result};
use crate::graph::{is_chain_graph, MixedGraph};

/// Recovers `(Λ, Ω)` from `Σ`.
///
/// Column `v` of `Λ` is the regression of `v` on its parents. For a digraph
/// `ω_vv` is the Schur complement `σ_vv − Σ_{v,pa} Σ_{pa,pa}^{-1} Σ_{pa,v}`.
/// Chain graphs are accepted too: there `Ω = (I − Λ)^T Σ (I − Λ)` restricted
/// to the diagonal and `B`. When `s` is not in the model the result is the
/// projection given by these formulas and need not be a valid point.
pub fn recover_params(g: &MixedGraph, s: &CovMatrix) -> Result<ParamPoint> {
    let order = g.require_acyclic()?;
    if !g.is_digraph() && !is_chain_graph(g) {
        return Err(Error::NotChainGraph);
    }
    let s = s.aligned_to(g.labels())?;
    let n = g.n();
    let mut lambda = DMatrix::zeros(n, n);
    let mut omega = DMatrix::zeros(n, n);
    for &v in &order {
        let pa = g.parents(v);
        if pa.is_empty() {
            omega[(v, v)] = s.get(v, v);
            continue;
        }
        let block = s.cond_cov_block(&[v], pa)?;
        omega[(v, v)] = block[(0, 0)];
        let sub = crate::linalg::submatrix(s.matrix(), pa, pa);
        let rhs = crate::linalg::submatrix(s.matrix(), pa, &[v]);
        let coef = sub
            .cholesky()
            .ok_or(Error::SingularBlock { condition: f64::INFINITY })?
            .solve(&rhs);
        for (i, &u) in pa.iter().enumerate() {
            lambda[(u, v)] = coef[(i, 0)];
        }
    }
    if !g.is_digraph() {
        let id = DMatrix::<f64>::identity(n, n);
        let resid = (&id - &lambda).transpose() * s.matrix() * (&id - &lambda);
        for u in 0..n {
            for v in 0..n {
                omega[(u, v)] = if u == v || g.has_bidirected(u, v) {
                    0.5 * (resid[(u, v)] + resid[(v, u)])
                } else {
                    0.0
                };
            }
        }
    }
    Ok(ParamPoint::new(lambda, omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{sample_params, sigma_of};
    use crate::linalg::max_abs_diff;
    use crate::random::{random_chain_graph, random_dag, seeded, BlockStructure};

    #[test]
    fn empty_graph_gives_diagonal() {
        let g = MixedGraph::from_labels(&["a", "b"], &[], &[]).unwrap();
        let s = CovMatrix::new(
            vec!["a".into(), "b".into()],
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]),
        )
        .unwrap();
        let p = recover_params(&g, &s).unwrap();
        assert_eq!(p.lambda, DMatrix::zeros(2, 2));
        assert_eq!(p.omega, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn latent_parent_dag_round_trip() {
        let g = MixedGraph::from_labels(
            &["1", "2", "3", "4", "5"],
            &[("1", "3"), ("2", "4"), ("5", "3"), ("5", "4")],
            &[],
        )
        .unwrap();
        let p = sample_params(&g, 17, 1.0);
        let q = recover_params(&g, &sigma_of(&g, &p).unwrap()).unwrap();
        for (u, v) in [(0, 2), (1, 3), (4, 2), (4, 3)] {
            assert!((p.lambda[(u, v)] - q.lambda[(u, v)]).abs() < 1e-12);
        }
    }

    #[test]
    fn random_round_trips() {
        let mut rng = seeded(2024);
        for seed in 0..100 {
            let n = 2 + (seed as usize % 6);
            let g = random_dag(&mut rng, n, n * (n - 1) / 2);
            let p = sample_params(&g, seed, 1.0);
            let s = sigma_of(&g, &p).unwrap();
            let q = recover_params(&g, &s).unwrap();
            assert!(max_abs_diff(&p.lambda, &q.lambda) < 1e-9, "seed {seed}");
            assert!(max_abs_diff(&p.omega, &q.omega) < 1e-9, "seed {seed}");
            let s2 = sigma_of(&g, &q).unwrap();
            assert!(max_abs_diff(s.matrix(), s2.matrix()) < 1e-9);
        }
    }

    #[test]
    fn chain_graph_round_trips() {
        let mut rng = seeded(77);
        for seed in 0..50 {
            let g = random_chain_graph(&mut rng, 6, BlockStructure::Arbitrary(50), 0.4);
            let p = sample_params(&g, seed, 1.0);
            let q = recover_params(&g, &sigma_of(&g, &p).unwrap()).unwrap();
            assert!(max_abs_diff(&p.lambda, &q.lambda) < 1e-9);
            assert!(max_abs_diff(&p.omega, &q.omega) < 1e-9);
        }
    }

    #[test]
    fn rejects_non_chain_graphs() {
        let g = MixedGraph::from_labels(&["a", "b"], &[("a", "b")], &[("a", "b")]).unwrap();
        let s = CovMatrix::new(vec!["a".into(), "b".into()], DMatrix::identity(2, 2)).unwrap();
        assert_eq!(recover_params(&g, &s).unwrap_err(), Error::NotChainGraph);
    }
}
