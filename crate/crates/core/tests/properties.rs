use nalgebra::DMatrix;
use proptest::prelude::*;

use chaincausal::causality::{decide_strict_causal, gamma_negation, sign_flip, Decision};
use chaincausal::gaussian::{membership_chain, recover_params, sample_params, sigma_of, MembershipOptions};
use chaincausal::graph::{ancestors, canonical_dag, clique_digraph, is_chain_graph, is_decomposable};
use chaincausal::linalg::{is_positive_definite, max_abs_diff};
use chaincausal::random::{random_chain_graph, random_dag, random_mixed, seeded, BlockStructure};
use chaincausal::separation::{is_d_connected, negation_edge_set, tops};
use chaincausal::VertexSet;

fn symmetric(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = entries[k];
            m[(j, i)] = entries[k];
            k += 1;
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sign_flip_is_an_involution(n in 3usize..7, entries in prop::collection::vec(-2.0f64..2.0, 28)) {
        let m = symmetric(n, &entries);
        let f = sign_flip(&m);
        prop_assert_eq!(sign_flip(&f), m.clone());
        prop_assert_eq!(f[(0, 1)], -m[(0, 1)]);
        prop_assert_eq!(f[(1, 0)], -m[(1, 0)]);
        for i in 0..n {
            for j in 0..n {
                if (i.min(j), i.max(j)) != (0, 1) {
                    prop_assert_eq!(f[(i, j)], m[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn sigma_is_positive_definite_on_acyclic_mixed_graphs(seed: u64, n in 1usize..8) {
        let g = random_mixed(&mut seeded(seed), n, 10, 6);
        let s = sigma_of(&g, &sample_params(&g, seed, 1.0)).unwrap();
        prop_assert!(is_positive_definite(s.matrix()));
    }

    #[test]
    fn regression_recovers_digraph_parameters(seed: u64, n in 1usize..8) {
        let g = random_dag(&mut seeded(seed), n, 12);
        let p = sample_params(&g, seed ^ 1, 1.0);
        let q = recover_params(&g, &sigma_of(&g, &p).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&p.lambda, &q.lambda) < 1e-9);
        prop_assert!(max_abs_diff(&p.omega, &q.omega) < 1e-9);
    }

    #[test]
    fn d_connection_is_symmetric(seed: u64, n in 2usize..7, mask: u8) {
        let g = random_dag(&mut seeded(seed), n, 10);
        let given: VertexSet = (2..n).filter(|i| mask >> i & 1 == 1).collect();
        prop_assert_eq!(
            is_d_connected(&g, 0, 1, &given).unwrap(),
            is_d_connected(&g, 1, 0, &given).unwrap()
        );
    }

    #[test]
    fn tops_are_ancestors_of_the_source(seed: u64, n in 2usize..7, mask: u8) {
        let g = random_dag(&mut seeded(seed), n, 10);
        let given: VertexSet = (2..n).filter(|i| mask >> i & 1 == 1).collect();
        let t = tops(&g, 0, 1, &given).unwrap();
        let an0 = ancestors(&g, &VertexSet::from([0]), &VertexSet::new());
        prop_assert!(t.is_subset(&an0));
        prop_assert!(t.is_disjoint(&given));
        prop_assert_eq!(t.is_empty(), !is_d_connected(&g, 0, 1, &given).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decision_follows_decomposability(seed: u64, n in 2usize..7, pct in 20u8..90) {
        let g = random_chain_graph(&mut seeded(seed), n, BlockStructure::Arbitrary(pct), 0.3);
        prop_assume!(is_chain_graph(&g));
        let verdict = decide_strict_causal(&g).unwrap();
        let decomposable = is_decomposable(&g).decomposable;
        prop_assert_eq!(verdict.decision == Decision::StrictlyCausal, decomposable);
        prop_assert_eq!(verdict.witness.is_some(), decomposable);
        if let Some(cert) = &verdict.refutation {
            prop_assert!(cert.identities.passed);
            prop_assert!(cert.phi_min_eigenvalue > 0.01);
            prop_assert!(cert.phi_flipped_min_eigenvalue < -0.05);
        }
    }

    #[test]
    fn negation_touches_exactly_the_negation_edges(seed: u64, p in 4usize..7) {
        let labels: Vec<String> = (1..=p).map(|i| i.to_string()).collect();
        let bi: Vec<(usize, usize)> = (0..p).map(|i| (i, (i + 1) % p)).collect();
        let cycle = chaincausal::MixedGraph::new(labels, Vec::new(), bi).unwrap();
        let (d, _) = canonical_dag(&cycle).unwrap();
        let a = VertexSet::new();
        let params = sample_params(&d, seed, 1.0);
        let flipped = gamma_negation(&d, &a, 0, 1, &params).unwrap();
        let edges = negation_edge_set(&d, &a, 0, 1).unwrap();
        prop_assert!(!edges.is_empty());
        prop_assert_eq!(&flipped.omega, &params.omega);
        for x in 0..d.n() {
            for y in 0..d.n() {
                let expected = if edges.contains(&(x, y)) { -params.lambda[(x, y)] } else { params.lambda[(x, y)] };
                prop_assert_eq!(flipped.lambda[(x, y)], expected);
            }
        }
    }

    #[test]
    fn clique_digraph_marginals_satisfy_chain_graph_independences(seed: u64, n in 2usize..8) {
        let g = random_chain_graph(&mut seeded(seed), n, BlockStructure::Decomposable, 0.3);
        let (d, _) = clique_digraph(&g).unwrap();
        let s = sigma_of(&d, &sample_params(&d, seed, 1.0)).unwrap();
        let marginal = s.marginal(g.labels()).unwrap();
        let report = membership_chain(&g, &marginal, 1e-9, &MembershipOptions::default()).unwrap();
        prop_assert!(report.member, "violations: {:?}", report.violations);
    }
}
