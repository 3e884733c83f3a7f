//! Seeded generators for random graphs, shared by tests and verification runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{MixedGraph, Vertex};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for trial `trial` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn random_forward_edges(rng: &mut SeededRng, order: &[Vertex], max_edges: usize) -> Vec<(Vertex, Vertex)> {
    let mut pairs = Vec::new();
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            pairs.push((order[i], order[j]));
        }
    }
    pairs.shuffle(rng);
    let k = rng.gen_range(0..=max_edges.min(pairs.len()));
    pairs.truncate(k);
    pairs
}

/// Acyclic digraph on labels `1..=n` with at most `max_edges` edges, whose
/// topological order is a random permutation of the declaration order.
pub fn random_dag(rng: &mut SeededRng, n: usize, max_edges: usize) -> MixedGraph {
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(rng);
    let edges = random_forward_edges(rng, &order, max_edges);
    MixedGraph::digraph(labels(n), edges).expect("forward edges form a DAG")
}

/// Acyclic mixed graph: a random DAG plus arbitrary bidirected edges.
pub fn random_mixed(rng: &mut SeededRng, n: usize, max_directed: usize, max_bidirected: usize) -> MixedGraph {
    let dag = random_dag(rng, n, max_directed);
    let mut pairs: Vec<(Vertex, Vertex)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.shuffle(rng);
    let k = rng.gen_range(0..=max_bidirected.min(pairs.len()));
    pairs.truncate(k);
    MixedGraph::new(labels(n), dag.directed_edges().collect::<Vec<_>>(), pairs).expect("valid edges")
}

/// Undirected graph on `n` vertices where each pair is present with
/// probability `density`.
pub fn random_undirected(rng: &mut SeededRng, n: usize, density: f64) -> Vec<(Vertex, Vertex)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Chordal graph on `members`: each new vertex attaches to a subset of a
/// random clique among the earlier ones.
fn random_chordal_on(rng: &mut SeededRng, members: &[Vertex]) -> Vec<(Vertex, Vertex)> {
    let mut edges: Vec<(Vertex, Vertex)> = Vec::new();
    let mut cliques: Vec<Vec<Vertex>> = Vec::new();
    for (i, &v) in members.iter().enumerate() {
        if i == 0 {
            cliques.push(vec![v]);
            continue;
        }
        let base = cliques.choose(rng).cloned().unwrap_or_default();
        let mut attach: Vec<Vertex> = base.into_iter().filter(|_| rng.gen_bool(0.75)).collect();
        if attach.is_empty() {
            attach.push(members[rng.gen_range(0..i)]);
        }
        for &a in &attach {
            edges.push((a, v));
        }
        let mut clique = attach;
        clique.push(v);
        cliques.push(clique);
    }
    edges
}

/// Which bidirected structure [`random_chain_graph`] places in each block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockStructure {
    /// Chordal bidirected part.
    Decomposable,
    /// Arbitrary bidirected edges with the given probability (percent).
    Arbitrary(u8),
}

/// Chain graph on `n` vertices: vertices are split into ordered blocks,
/// bidirected edges stay inside blocks and directed edges point from earlier
/// to later blocks with probability `p_dir`.
pub fn random_chain_graph(rng: &mut SeededRng, n: usize, blocks: BlockStructure, p_dir: f64) -> MixedGraph {
    let mut perm: Vec<Vertex> = (0..n).collect();
    perm.shuffle(rng);
    let mut block_of = vec![0usize; n];
    let mut groups: Vec<Vec<Vertex>> = Vec::new();
    let mut i = 0;
    while i < n {
        let size = rng.gen_range(1..=(n - i).min(4));
        groups.push(perm[i..i + size].to_vec());
        for &v in &perm[i..i + size] {
            block_of[v] = groups.len() - 1;
        }
        i += size;
    }
    let mut bi = Vec::new();
    for grp in &groups {
        match blocks {
            BlockStructure::Decomposable => bi.extend(random_chordal_on(rng, grp)),
            BlockStructure::Arbitrary(pct) => {
                for a in 0..grp.len() {
                    for b in a + 1..grp.len() {
                        if rng.gen_range(0..100) < pct {
                            bi.push((grp[a], grp[b]));
                        }
                    }
                }
            }
        }
    }
    let mut dir = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if block_of[u] < block_of[v] && rng.gen_bool(p_dir) {
                dir.push((u, v));
            }
        }
    }
    MixedGraph::new(labels(n), dir, bi).expect("valid edges")
}
