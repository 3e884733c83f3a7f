use std::fmt;

use serde::{Serialize, Serializer};

use super::equality::{verify_model_equality_with, EqualityOptions};
use super::Witness;
use crate::error::{Error, Result};
use crate::graph::{bidirected_cliques, clique_digraph, is_chain_graph, is_decomposable, HiddenMap, MixedGraph, VertexSet};
use crate::separation::is_d_connected;

/// A causality index or one of its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IndexValue {
    Finite(usize),
    Infinite,
}

impl fmt::Display for IndexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexValue::Finite(h) => write!(f, "{h}"),
            IndexValue::Infinite => f.write_str("infinity"),
        }
    }
}

impl Serialize for IndexValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IndexValue::Finite(h) => s.serialize_u64(*h as u64),
            IndexValue::Infinite => s.serialize_str("infinity"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexOptions {
    /// Largest number of hidden vertices searched exhaustively.
    pub h_max: usize,
    /// Limit on the number of candidate digraphs examined overall.
    pub budget: u64,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Require every hidden vertex to have at least two children.
    pub prune: bool,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            h_max: 2,
            budget: 2_000_000,
            trials: 20,
            tol: 1e-6,
            seed: 42,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStats {
    pub hidden: usize,
    /// Acyclic candidates after deduplication and pruning.
    pub candidates: u64,
    /// Candidates whose d-separation pattern on the observed vertices
    /// matches the graph.
    pub screened: u64,
    /// Screened candidates that also passed the equality check.
    pub verified: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexBounds {
    pub lower: IndexValue,
    pub upper: IndexValue,
    pub witness: Option<Witness>,
    pub levels: Vec<LevelStats>,
    /// The budget ran out; the bounds are those established before that.
    pub budget_exceeded: bool,
}

impl IndexBounds {
    /// The index, when both bounds meet.
    pub fn exact(&self) -> Option<IndexValue> {
        (self.lower == self.upper).then_some(self.lower)
    }
}

/// Separation table of the observed vertices: bit `A` of entry `(u, v)` is
/// set when `u` and `v` are d-separated given the observed set `A`.
struct Pattern {
    m: usize,
    table: Vec<Vec<bool>>,
}

impl Pattern {
    fn pair_index(m: usize, u: usize, v: usize) -> usize {
        u * m + v
    }

    fn of_graph(g: &MixedGraph) -> Result<Pattern> {
        let m = g.n();
        let mut table = vec![Vec::new(); m * m];
        for u in 0..m {
            for v in u + 1..m {
                let mut row = vec![false; 1 << m];
                for mask in 0..(1usize << m) {
                    if mask & (1 << u) != 0 || mask & (1 << v) != 0 {
                        continue;
                    }
                    let given: VertexSet = (0..m).filter(|&x| mask & (1 << x) != 0).collect();
                    row[mask] = !is_d_connected(g, u, v, &given)?;
                }
                table[Self::pair_index(m, u, v)] = row;
            }
        }
        Ok(Pattern { m, table })
    }

    /// Whether the DAG given by parent masks has the same pattern.
    fn matches(&self, parents: &[u32]) -> bool {
        let m = self.m;
        for u in 0..m {
            for v in u + 1..m {
                let row = &self.table[Self::pair_index(m, u, v)];
                for mask in 0..(1usize << m) {
                    if mask & (1 << u) != 0 || mask & (1 << v) != 0 {
                        continue;
                    }
                    if d_separated(parents, u, v, mask as u32) != row[mask] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// d-separation in a small DAG via the moral graph of the ancestral set.
fn d_separated(parents: &[u32], u: usize, v: usize, given: u32) -> bool {
    let n = parents.len();
    let mut anc = (1u32 << u) | (1u32 << v) | given;
    loop {
        let mut next = anc;
        for w in 0..n {
            if anc & (1 << w) != 0 {
                next |= parents[w];
            }
        }
        if next == anc {
            break;
        }
        anc = next;
    }
    let mut adj = vec![0u32; n];
    for w in 0..n {
        if anc & (1 << w) == 0 {
            continue;
        }
        let pa = parents[w];
        adj[w] |= pa;
        for x in 0..n {
            if pa & (1 << x) != 0 {
                adj[x] |= (1 << w) | (pa & !(1 << x));
            }
        }
    }
    let allowed = anc & !given;
    let mut seen = 1u32 << u;
    let mut frontier = seen;
    while frontier != 0 {
        let mut next = 0;
        for w in 0..n {
            if frontier & (1 << w) != 0 {
                next |= adj[w];
            }
        }
        next &= allowed & !seen;
        if next & (1 << v) != 0 {
            return false;
        }
        seen |= next;
        frontier = next;
    }
    true
}

fn is_acyclic(parents: &[u32]) -> bool {
    let n = parents.len();
    let mut done = 0u32;
    for _ in 0..n {
        let Some(w) = (0..n).find(|&w| done & (1 << w) == 0 && parents[w] & !done == 0) else {
            return false;
        };
        done |= 1 << w;
    }
    true
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out
}

/// Parent masks after relabelling hidden vertex `m + i` as `m + perm[i]`.
fn relabel(parents: &[u32], m: usize, perm: &[usize]) -> Vec<u32> {
    let map = |x: usize| if x < m { x } else { m + perm[x - m] };
    let mut out = vec![0u32; parents.len()];
    for (w, &pa) in parents.iter().enumerate() {
        let mut mask = 0;
        for x in 0..parents.len() {
            if pa & (1 << x) != 0 {
                mask |= 1 << map(x);
            }
        }
        out[map(w)] = mask;
    }
    out
}

struct Enumerator<'a> {
    m: usize,
    n: usize,
    pairs: Vec<(usize, usize)>,
    perms: Vec<Vec<usize>>,
    prune: bool,
    pattern: &'a Pattern,
    budget_left: u64,
}

impl Enumerator<'_> {
    fn accept(&self, parents: &[u32]) -> bool {
        if !is_acyclic(parents) {
            return false;
        }
        if self.prune {
            for h in self.m..self.n {
                let kids = parents.iter().filter(|&&pa| pa & (1 << h) != 0).count();
                if kids < 2 {
                    return false;
                }
            }
        }
        // keep only the smallest relabelling of the hidden vertices
        self.perms.iter().all(|p| relabel(parents, self.m, p).as_slice() >= parents)
    }

    /// Visits candidate digraphs; `visit` returns true to stop.
    fn run(
        &mut self,
        k: usize,
        parents: &mut Vec<u32>,
        stats: &mut LevelStats,
        visit: &mut dyn FnMut(&[u32]) -> Result<bool>,
    ) -> Result<Option<bool>> {
        if k == self.pairs.len() {
            if !self.accept(parents) {
                return Ok(Some(false));
            }
            if self.budget_left == 0 {
                return Ok(None);
            }
            self.budget_left -= 1;
            stats.candidates += 1;
            if !self.pattern.matches(&parents[..]) {
                return Ok(Some(false));
            }
            stats.screened += 1;
            return visit(parents).map(Some);
        }
        let (i, j) = self.pairs[k];
        for state in 0..3 {
            match state {
                1 => parents[j] |= 1 << i,
                2 => parents[i] |= 1 << j,
                _ => {}
            }
            let r = self.run(k + 1, parents, stats, visit);
            parents[j] &= !(1 << i);
            parents[i] &= !(1 << j);
            match r? {
                Some(false) => {}
                other => return Ok(other),
            }
        }
        Ok(Some(false))
    }
}

fn build_digraph(g: &MixedGraph, parents: &[u32]) -> (MixedGraph, HiddenMap) {
    let m = g.n();
    let n = parents.len();
    let mut labels = g.labels().to_vec();
    for i in 1..=n - m {
        let mut l = format!("h{i}");
        while labels.contains(&l) {
            l.push('\'');
        }
        labels.push(l);
    }
    let mut edges = Vec::new();
    for (w, &pa) in parents.iter().enumerate() {
        for x in 0..n {
            if pa & (1 << x) != 0 {
                edges.push((x, w));
            }
        }
    }
    let d = MixedGraph::digraph(labels, edges).expect("acyclic candidate");
    let hidden = (m..n)
        .map(|h| (h, d.children(h).iter().copied().filter(|&c| c < m).collect()))
        .collect();
    (d, HiddenMap { observed: m, hidden })
}

/// Bounds on the smallest number of hidden vertices of a DAG whose observed
/// marginal model equals the model of `g`.
///
/// Non-decomposable graphs have no such DAG. Otherwise the clique digraph
/// gives an upper bound, and levels `h = 0, 1, ...` are searched: every
/// acyclic digraph on `|V| + h` vertices (hidden vertices interchangeable,
/// and with at least two children when pruning) is screened by comparing
/// its d-separations among `V` with those of `g`, and survivors are checked
/// by [`verify_model_equality_with`]. A level with no survivor raises the
/// lower bound; the screen is a necessary condition, the equality check is
/// numerical evidence.
pub fn causality_index_search(g: &MixedGraph, opts: &IndexOptions) -> Result<IndexBounds> {
    if !is_chain_graph(g) {
        return Err(Error::NotChainGraph);
    }
    if !is_decomposable(g).decomposable {
        return Ok(IndexBounds {
            lower: IndexValue::Infinite,
            upper: IndexValue::Infinite,
            witness: None,
            levels: Vec::new(),
            budget_exceeded: false,
        });
    }
    let m = g.n();
    let clique_count = bidirected_cliques(g, 2).len();
    let (cd, cmap) = clique_digraph(g)?;
    let mut bounds = IndexBounds {
        lower: IndexValue::Finite(0),
        upper: IndexValue::Finite(clique_count),
        witness: Some(Witness {
            digraph: cd,
            hidden: cmap,
        }),
        levels: Vec::new(),
        budget_exceeded: false,
    };
    if m + opts.h_max.min(clique_count) > 32 {
        return Err(Error::BadQuery("index search is limited to 32 vertices".into()));
    }
    let pattern = Pattern::of_graph(g)?;
    let eq = EqualityOptions {
        trials: opts.trials,
        tol: opts.tol,
        seed: opts.seed,
        stop_on_failure: true,
    };
    let mut budget = opts.budget;
    for h in 0..clique_count.min(opts.h_max + 1) {
        let n = m + h;
        let mut en = Enumerator {
            m,
            n,
            pairs: (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            perms: permutations(h),
            prune: opts.prune,
            pattern: &pattern,
            budget_left: budget,
        };
        let mut stats = LevelStats {
            hidden: h,
            candidates: 0,
            screened: 0,
            verified: 0,
        };
        let mut found: Option<Witness> = None;
        let outcome = en.run(0, &mut vec![0u32; n], &mut stats, &mut |parents| {
            let (d, hidden) = build_digraph(g, parents);
            if verify_model_equality_with(g, &d, &eq)?.passed {
                found = Some(Witness { digraph: d, hidden });
                return Ok(true);
            }
            Ok(false)
        })?;
        budget = en.budget_left;
        if found.is_some() {
            stats.verified = 1;
        }
        bounds.levels.push(stats);
        if let Some(w) = found {
            bounds.upper = IndexValue::Finite(h);
            bounds.witness = Some(w);
            return Ok(bounds);
        }
        if outcome.is_none() {
            bounds.budget_exceeded = true;
            return Ok(bounds);
        }
        bounds.lower = IndexValue::Finite(h + 1);
    }
    Ok(bounds)
}
