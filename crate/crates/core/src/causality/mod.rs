//! Strict Gaussian causality of chain graphs.
//!
//! A chain graph is strictly Gaussian causal exactly when its bidirected
//! part is decomposable. [`decide_strict_causal`] answers the question and
//! attaches a certificate either way: the clique digraph as a witness, or a
//! chordless bidirected cycle with a sign-flip matrix as a refutation. The
//! rest of the module checks those certificates numerically.

mod equality;
mod identities;
mod index;
mod realize;
mod signflip;

pub use equality::{
    direction_two_residual, verify_model_equality, verify_model_equality_with, EqualityOptions, EqualityReport,
    TrialResidual,
};
pub use identities::{
    check_identities_sampled, gamma_negation, is_flip_of, verify_determinant_identities, DeterminantCheck,
    IdentityReport, IdentitySummary, Relation,
};
pub use index::{causality_index_search, IndexBounds, IndexOptions, IndexValue, LevelStats};
pub use realize::{realize_omega, RealizationResult, REALIZE_TOL};
pub use signflip::{cycle_matrix, find_sign_flip_counterexample, sign_flip, MAX_FLIPPED_EIGENVALUE, MIN_PHI_EIGENVALUE};

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{
    ancestors, canonical_dag, chain_components, clique_digraph, is_chain_graph, is_decomposable, HiddenMap, MixedGraph,
    Vertex, VertexSet,
};
use crate::linalg::min_eigenvalue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    StrictlyCausal,
    NotStrictlyCausal,
}

/// A digraph with hidden vertices whose observed marginal model is the
/// model of the decided graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub digraph: MixedGraph,
    pub hidden: HiddenMap,
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Hidden<'a> {
            label: &'a str,
            children: Vec<String>,
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            graph: crate::graph::RawGraph,
            hidden: Vec<Hidden<'a>>,
        }
        Repr {
            graph: self.digraph.to_raw(),
            hidden: self
                .hidden
                .hidden
                .iter()
                .map(|(h, kids)| Hidden {
                    label: self.digraph.label(*h),
                    children: self.digraph.labels_of(kids),
                })
                .collect(),
        }
        .serialize(s)
    }
}

pub(crate) fn matrix_rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    rows.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefutationCertificate {
    /// Chordless bidirected cycle; position `i` plays the role of `i + 1`.
    pub cycle: Vec<String>,
    #[serde(skip)]
    pub cycle_vertices: Vec<Vertex>,
    /// Strict ancestors of the cycle's chain component, `an(C) ∖ C`.
    pub a: Vec<String>,
    /// Unit-diagonal matrix on the cycle pattern, rows in cycle order.
    #[serde(serialize_with = "matrix_rows")]
    pub phi: DMatrix<f64>,
    pub phi_min_eigenvalue: f64,
    pub phi_flipped_min_eigenvalue: f64,
    /// Determinant identities on the canonical DAG of the graph.
    pub identities: IdentitySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalityVerdict {
    pub decision: Decision,
    pub witness: Option<Witness>,
    pub refutation: Option<RefutationCertificate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecideOptions {
    pub seed: u64,
    /// Sampled points for the determinant identities of a refutation.
    pub trials: usize,
    pub tol: f64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            trials: 20,
            tol: 1e-9,
        }
    }
}

pub fn decide_strict_causal(g: &MixedGraph) -> Result<CausalityVerdict> {
    decide_strict_causal_with(g, &DecideOptions::default())
}

pub fn decide_strict_causal_with(g: &MixedGraph, opts: &DecideOptions) -> Result<CausalityVerdict> {
    if !is_chain_graph(g) {
        return Err(Error::NotChainGraph);
    }
    let report = is_decomposable(g);
    let Some(cycle) = report.certificate else {
        let (digraph, hidden) = clique_digraph(g)?;
        return Ok(CausalityVerdict {
            decision: Decision::StrictlyCausal,
            witness: Some(Witness { digraph, hidden }),
            refutation: None,
        });
    };
    Ok(CausalityVerdict {
        decision: Decision::NotStrictlyCausal,
        witness: None,
        refutation: Some(refutation(g, &cycle, opts)?),
    })
}

/// `an(C) ∖ C` for the chain component `C` containing `v`.
pub fn strict_component_ancestors(g: &MixedGraph, v: Vertex) -> Result<VertexSet> {
    let parts = chain_components(g)?;
    let comp: VertexSet = parts.component(v).iter().copied().collect();
    let an = ancestors(g, &comp, &VertexSet::new());
    Ok(an.difference(&comp).copied().collect())
}

fn refutation(g: &MixedGraph, cycle: &[Vertex], opts: &DecideOptions) -> Result<RefutationCertificate> {
    let a = strict_component_ancestors(g, cycle[0])?;
    let phi = find_sign_flip_counterexample(cycle.len())?;
    let (d, _) = canonical_dag(g)?;
    let identities = check_identities_sampled(&d, &a, cycle, opts.trials, opts.seed, opts.tol)?;
    Ok(RefutationCertificate {
        cycle: g.labels_of(cycle),
        cycle_vertices: cycle.to_vec(),
        a: g.labels_of(&a),
        phi_min_eigenvalue: min_eigenvalue(&phi),
        phi_flipped_min_eigenvalue: min_eigenvalue(&sign_flip(&phi)),
        phi,
        identities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confounded_chain_is_strictly_causal() {
        let g = MixedGraph::from_labels(&["1", "2", "3", "4"], &[("1", "3"), ("2", "4")], &[("3", "4")]).unwrap();
        let v = decide_strict_causal(&g).unwrap();
        assert_eq!(v.decision, Decision::StrictlyCausal);
        let w = v.witness.unwrap();
        assert!(v.refutation.is_none());
        assert_eq!(w.digraph.n(), 5);
        assert_eq!(w.hidden.hidden, vec![(4, vec![2, 3])]);
        assert_eq!(w.digraph.num_directed(), 4);
    }

    #[test]
    fn four_cycle_is_refuted() {
        let g = MixedGraph::from_labels(
            &["1", "2", "3", "4"],
            &[],
            &[("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")],
        )
        .unwrap();
        let v = decide_strict_causal(&g).unwrap();
        assert_eq!(v.decision, Decision::NotStrictlyCausal);
        assert!(v.witness.is_none());
        let c = v.refutation.unwrap();
        assert_eq!(c.cycle, ["1", "2", "3", "4"]);
        assert!(c.a.is_empty());
        assert!(c.phi_min_eigenvalue > 0.01 && c.phi_flipped_min_eigenvalue < -0.05);
        assert!(c.identities.passed, "{:?}", c.identities);
    }

    #[test]
    fn cycle_below_directed_parents() {
        // a -> p and a -> b -> r feed a 4-cycle on p, q, r, s; z is isolated.
        let g = MixedGraph::from_labels(
            &["a", "p", "q", "r", "s", "b", "z"],
            &[("a", "p"), ("b", "r"), ("a", "b")],
            &[("p", "q"), ("q", "r"), ("r", "s"), ("s", "p")],
        )
        .unwrap();
        let c = decide_strict_causal(&g).unwrap().refutation.unwrap();
        assert_eq!(c.a, ["a", "b"]);
        assert_eq!(c.cycle.len(), 4);
        assert!(c.identities.passed, "{:?}", c.identities);
    }

    #[test]
    fn triangle_and_non_chain_graphs() {
        let g = MixedGraph::from_labels(&["1", "2", "3"], &[], &[("1", "2"), ("2", "3"), ("1", "3")]).unwrap();
        assert_eq!(decide_strict_causal(&g).unwrap().decision, Decision::StrictlyCausal);
        let g = MixedGraph::from_labels(&["1", "2"], &[("1", "2")], &[("1", "2")]).unwrap();
        assert_eq!(decide_strict_causal(&g).unwrap_err(), Error::NotChainGraph);
    }

    #[test]
    fn verdict_serializes() {
        let g = MixedGraph::from_labels(&["1", "2", "3", "4"], &[("1", "3"), ("2", "4")], &[("3", "4")]).unwrap();
        let json = serde_json::to_value(decide_strict_causal(&g).unwrap()).unwrap();
        assert_eq!(json["decision"], "StrictlyCausal");
        assert_eq!(json["witness"]["hidden"][0]["label"], "h{3,4}");
        assert!(json["refutation"].is_null());
    }
}
