//! Covariance algebra for linear structural equation models.
//!
//! A parameter point `(Λ, Ω)` on a graph induces
//! `Σ = (I − Λ)^{-T} Ω (I − Λ)^{-1}`. Everything here works on population
//! covariance matrices; there is no estimation from data.

mod csv_io;
mod membership;
mod recover;
mod sample;

pub use csv_io::{read_cov_csv, write_cov_csv};
pub use membership::{membership_chain, MembershipOptions, MembershipReport, Violation};
pub use recover::recover_params;
pub use sample::{sample_params, sample_params_with, SampleOptions};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{MixedGraph, Vertex};
use crate::linalg;

/// Largest admissible condition number of a conditioning block.
pub const MAX_CONDITION: f64 = 1e12;

/// Edge coefficients `Λ` (entry `(u, v)` for `u -> v`) and error covariance `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub lambda: DMatrix<f64>,
    pub omega: DMatrix<f64>,
}

impl ParamPoint {
    pub fn new(lambda: DMatrix<f64>, omega: DMatrix<f64>) -> Self {
        Self { lambda, omega }
    }

    pub fn dim(&self) -> usize {
        self.lambda.nrows()
    }

    /// Checks that `Λ` lives on `D`, `Ω` on the diagonal plus `B`, and that
    /// `Ω` is symmetric positive definite.
    pub fn check_support(&self, g: &MixedGraph) -> Result<()> {
        let n = g.n();
        if self.lambda.shape() != (n, n) || self.omega.shape() != (n, n) {
            return Err(Error::SizeMismatch(format!(
                "parameters are {:?}/{:?}, graph has {n} vertices",
                self.lambda.shape(),
                self.omega.shape()
            )));
        }
        for u in 0..n {
            for v in 0..n {
                if self.lambda[(u, v)] != 0.0 && !g.has_directed(u, v) {
                    return Err(Error::SupportViolation(format!(
                        "lambda[{}, {}] is nonzero without an edge",
                        g.label(u),
                        g.label(v)
                    )));
                }
                if u != v && self.omega[(u, v)] != 0.0 && !g.has_bidirected(u, v) {
                    return Err(Error::SupportViolation(format!(
                        "omega[{}, {}] is nonzero without a bidirected edge",
                        g.label(u),
                        g.label(v)
                    )));
                }
                if self.omega[(u, v)] != self.omega[(v, u)] {
                    return Err(Error::SupportViolation("omega is not symmetric".into()));
                }
            }
        }
        if !linalg::is_positive_definite(&self.omega) {
            return Err(Error::NotPositiveDefinite("omega".into()));
        }
        Ok(())
    }
}

/// Symmetric positive definite matrix indexed by vertex labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovMatrix {
    labels: Vec<String>,
    #[serde(serialize_with = "serialize_rows")]
    matrix: DMatrix<f64>,
}

fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl CovMatrix {
    /// Validates shape, symmetry (relative 1e-12) and positive definiteness.
    pub fn new(labels: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if matrix.shape() != (n, n) {
            return Err(Error::SizeMismatch(format!(
                "{} labels for a {:?} matrix",
                n,
                matrix.shape()
            )));
        }
        let scale = matrix.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotPositiveDefinite(format!(
                        "matrix is not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        if !linalg::is_positive_definite(&matrix) {
            return Err(Error::NotPositiveDefinite("covariance matrix".into()));
        }
        Ok(Self { labels, matrix })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    /// Submatrix on the given indices, in that order.
    pub fn marginal_idx(&self, keep: &[usize]) -> CovMatrix {
        CovMatrix {
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
            matrix: linalg::submatrix(&self.matrix, keep, keep),
        }
    }

    pub fn marginal<S: AsRef<str>>(&self, labels: &[S]) -> Result<CovMatrix> {
        let keep = labels
            .iter()
            .map(|l| self.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.marginal_idx(&keep))
    }

    /// Reorders to `labels`, which must name exactly this matrix's vertices.
    pub fn aligned_to<S: AsRef<str>>(&self, labels: &[S]) -> Result<CovMatrix> {
        if labels.len() != self.n() {
            return Err(Error::SizeMismatch(format!(
                "expected {} labels, matrix has {}",
                labels.len(),
                self.n()
            )));
        }
        self.marginal(labels)
    }

    /// Rescaled to unit diagonal (a correlation matrix).
    pub fn standardized(&self) -> CovMatrix {
        let d: Vec<f64> = (0..self.n()).map(|i| self.matrix[(i, i)].sqrt()).collect();
        let m = DMatrix::from_fn(self.n(), self.n(), |i, j| self.matrix[(i, j)] / (d[i] * d[j]));
        CovMatrix {
            labels: self.labels.clone(),
            matrix: m,
        }
    }

    fn conditioning_factor(&self, given: &[usize]) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let block = linalg::submatrix(&self.matrix, given, given);
        let (lo, hi) = linalg::eigen_range(&block);
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if condition > MAX_CONDITION {
            return Err(Error::SingularBlock { condition });
        }
        block.cholesky().ok_or(Error::SingularBlock { condition })
    }

    /// Conditional covariance block `Σ_{S,S} − Σ_{S,A} Σ_{A,A}^{-1} Σ_{A,S}`.
    ///
    /// An empty conditioning set returns the raw block; a numerically
    /// singular `Σ_{A,A}` is an error.
    pub fn cond_cov_block(&self, s: &[usize], given: &[usize]) -> Result<DMatrix<f64>> {
        let base = linalg::submatrix(&self.matrix, s, s);
        if given.is_empty() {
            return Ok(base);
        }
        let chol = self.conditioning_factor(given)?;
        let cross = linalg::submatrix(&self.matrix, given, s);
        let solved = chol.solve(&cross);
        Ok(base - cross.transpose() * solved)
    }

    /// Conditional covariance `σ_{uv.A}`.
    pub fn cond_cov(&self, u: usize, v: usize, given: &[usize]) -> Result<f64> {
        if given.contains(&u) || given.contains(&v) {
            return Err(Error::BadQuery("u and v must lie outside the conditioning set".into()));
        }
        if given.is_empty() {
            return Ok(self.matrix[(u, v)]);
        }
        let chol = self.conditioning_factor(given)?;
        let a_v = linalg::submatrix(&self.matrix, given, &[v]);
        let a_u = linalg::submatrix(&self.matrix, given, &[u]);
        let x = chol.solve(&a_v);
        Ok(self.matrix[(u, v)] - (a_u.transpose() * x)[(0, 0)])
    }
}

/// `Σ = (I − Λ)^{-T} Ω (I − Λ)^{-1}`.
///
/// `(I − Λ)^{-T}` is built row by row in topological order,
/// `T[v,:] = e_v + Σ_{u ∈ pa(v)} λ_uv T[u,:]`, so no inversion is performed.
pub fn sigma_of(g: &MixedGraph, p: &ParamPoint) -> Result<CovMatrix> {
    let order = g.require_acyclic()?;
    p.check_support(g)?;
    let t = propagation_matrix(g, &order, &p.lambda);
    let sigma = &t * &p.omega * t.transpose();
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    CovMatrix::new(g.labels().to_vec(), sigma)
}

/// `(I − Λ)^{-T}` for an acyclic support, given a topological order.
pub(crate) fn propagation_matrix(g: &MixedGraph, order: &[Vertex], lambda: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.n();
    let mut t = DMatrix::<f64>::zeros(n, n);
    for &v in order {
        t[(v, v)] = 1.0;
        for &u in g.parents(v) {
            let w = lambda[(u, v)];
            if w != 0.0 {
                for k in 0..n {
                    let x = t[(u, k)];
                    if x != 0.0 {
                        t[(v, k)] += w * x;
                    }
                }
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_dag, seeded};

    fn latent_parent_dag() -> MixedGraph {
        MixedGraph::from_labels(
            &["1", "2", "3", "4", "5"],
            &[("1", "3"), ("2", "4"), ("5", "3"), ("5", "4")],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn latent_parent_dag_marginal_has_the_hidden_variable_form() {
        let g = latent_parent_dag();
        let (l13, l24, l53, l54) = (0.7, -1.3, 0.4, 2.1);
        let w = [1.1, 0.9, 0.5, 1.7, 1.3];
        let mut lambda = DMatrix::zeros(5, 5);
        lambda[(0, 2)] = l13;
        lambda[(1, 3)] = l24;
        lambda[(4, 2)] = l53;
        lambda[(4, 3)] = l54;
        let omega = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&w));
        let s = sigma_of(&g, &ParamPoint::new(lambda, omega)).unwrap();
        let m = s.marginal(&["1", "2", "3", "4"]).unwrap();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[
                w[0], 0.0, l13 * w[0], 0.0,
                0.0, w[1], 0.0, l24 * w[1],
                l13 * w[0], 0.0, l13 * l13 * w[0] + w[2] + l53 * l53 * w[4], l53 * l54 * w[4],
                0.0, l24 * w[1], l53 * l54 * w[4], l24 * l24 * w[1] + w[3] + l54 * l54 * w[4],
            ],
        );
        assert!(linalg::max_abs_diff(m.matrix(), &expect) < 1e-12);
        assert_eq!(m.cond_cov(0, 1, &[]).unwrap(), 0.0);
    }

    #[test]
    fn zero_lambda_gives_omega() {
        let g = MixedGraph::from_labels(&["a", "b", "c"], &[("a", "b")], &[("b", "c")]).unwrap();
        let omega = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 1.0, 0.3, 0.0, 0.3, 1.5]);
        let s = sigma_of(&g, &ParamPoint::new(DMatrix::zeros(3, 3), omega.clone())).unwrap();
        assert_eq!(s.matrix(), &omega);
    }

    #[test]
    fn support_violations() {
        let g = MixedGraph::from_labels(&["a", "b"], &[("a", "b")], &[]).unwrap();
        let mut lambda = DMatrix::zeros(2, 2);
        lambda[(1, 0)] = 1.0;
        let p = ParamPoint::new(lambda, DMatrix::identity(2, 2));
        assert!(matches!(sigma_of(&g, &p), Err(Error::SupportViolation(_))));
        let omega = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        let p = ParamPoint::new(DMatrix::zeros(2, 2), omega);
        assert!(matches!(sigma_of(&g, &p), Err(Error::SupportViolation(_))));
        let p = ParamPoint::new(DMatrix::zeros(2, 2), -DMatrix::identity(2, 2));
        assert!(matches!(sigma_of(&g, &p), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn marginal_edge_cases() {
        let g = latent_parent_dag();
        let s = sigma_of(&g, &sample_params(&g, 3, 1.0)).unwrap();
        assert_eq!(s.marginal(s.labels()).unwrap(), s);
        let one = s.marginal(&["4"]).unwrap();
        assert_eq!(one.n(), 1);
        assert_eq!(one.get(0, 0), s.get(3, 3));
        assert_eq!(s.marginal(&["9"]).unwrap_err(), Error::UnknownVertex("9".into()));
    }

    #[test]
    fn cond_cov_matches_determinant_ratio() {
        let mut rng = seeded(5);
        for seed in 0..20 {
            let g = random_dag(&mut rng, 4, 6);
            let s = sigma_of(&g, &sample_params(&g, seed, 1.0)).unwrap();
            let m = s.matrix();
            // det(Σ_{uA,vA}) / det(Σ_{A,A}) with A = {0}
            let (u, v, a) = (1, 3, 0);
            let ratio = linalg::minor(m, &[u, a], &[v, a]) / m[(a, a)];
            assert!((s.cond_cov(u, v, &[a]).unwrap() - ratio).abs() < 1e-10);
            let ratio = linalg::minor(m, &[u, a, 2], &[v, a, 2]) / linalg::minor(m, &[a, 2], &[a, 2]);
            assert!((s.cond_cov(u, v, &[a, 2]).unwrap() - ratio).abs() < 1e-10);
            let block = s.cond_cov_block(&[u, v], &[a, 2]).unwrap();
            assert!((block[(0, 1)] - ratio).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_conditioning_block_is_an_error() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0 - 1e-14, 0.0, 1.0 - 1e-14, 1.0]);
        let s = CovMatrix {
            labels: vec!["a".into(), "b".into(), "c".into()],
            matrix: m,
        };
        assert!(matches!(s.cond_cov(1, 0, &[1, 2]), Err(Error::BadQuery(_))));
        assert!(matches!(s.cond_cov(0, 0, &[1, 2]), Err(Error::SingularBlock { .. })));
        let s2 = s.clone();
        assert!(matches!(s2.cond_cov_block(&[0], &[1, 2]), Err(Error::SingularBlock { .. })));
    }

    #[test]
    fn cov_matrix_rejects_asymmetric_and_indefinite() {
        let l = vec!["a".to_string(), "b".to_string()];
        assert!(CovMatrix::new(l.clone(), DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        assert!(CovMatrix::new(l.clone(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(CovMatrix::new(l, DMatrix::identity(3, 3)).is_err());
    }
}
