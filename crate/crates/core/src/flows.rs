//! Flow-based degree repair.
//!
//! `degree_constrained_subgraph` extracts a spanning subgraph of a bipartite
//! pair meeting per-vertex degree demands exactly, by integral max-flow
//! (source -> A with capacity n_a, unit edge capacities, B -> sink with
//! n_b). `fix_divisibility` uses it pairwise to peel a bounded-degree graph
//! H so that G - H has equal cross-degrees everywhere. `reduce_degree` is
//! the desk-scale degree-reduction step: random sparsification, divisibility
//! fix, greedy approximate decomposition, then per-vertex repair of the
//! high-degree leftover with exact clique matchings inside the reserved
//! random layer.

use crate::cover;
use crate::fractional::{approx_decompose, ApproxScore};
use crate::graph::MultipartiteGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Dinic max-flow
// ---------------------------------------------------------------------------

struct Dinic {
    first: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(nodes: usize) -> Self {
        Dinic {
            first: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![0; nodes],
            iter: vec![0; nodes],
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: i64) -> usize {
        let id = self.to.len();
        self.first[u].push(id);
        self.to.push(v);
        self.cap.push(c);
        self.first[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        id
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in &self.first[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, f: i64) -> i64 {
        if u == t {
            return f;
        }
        while self.iter[u] < self.first[u].len() {
            let e = self.first[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, f.min(self.cap[e]));
                if d > 0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        while self.bfs(s, t) {
            self.iter.fill(0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    /// Nodes reachable from `s` in the residual graph (a min cut witness).
    fn min_cut_side(&mut self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.first.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in &self.first[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

// ---------------------------------------------------------------------------
// Degree-constrained subgraph
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("demand sums differ: side A wants {a}, side B wants {b}")]
    UnbalancedDemand { a: usize, b: usize },
    #[error("no subgraph meets the demands; violating cut has {cut_side_a} A-vertices")]
    Infeasible { cut_side_a: usize, cut_vertices: Vec<usize> },
    #[error("demand {demand} at vertex {vertex} exceeds its degree {degree}")]
    DemandExceedsDegree { vertex: usize, demand: usize, degree: usize },
}

/// Extracts a subgraph of the bipartite pair `(class_a, class_b)` of `g` in
/// which every vertex `v` of the pair has degree exactly `demand(v)`.
/// Demands are indexed by position within each class.
pub fn degree_constrained_subgraph(
    g: &MultipartiteGraph,
    class_a: usize,
    class_b: usize,
    demand_a: &[usize],
    demand_b: &[usize],
) -> Result<Vec<(usize, usize)>, FlowError> {
    let n = g.class_size();
    assert_eq!(demand_a.len(), n);
    assert_eq!(demand_b.len(), n);
    let sum_a: usize = demand_a.iter().sum();
    let sum_b: usize = demand_b.iter().sum();
    if sum_a != sum_b {
        return Err(FlowError::UnbalancedDemand { a: sum_a, b: sum_b });
    }
    // nodes: 0..n = A side, n..2n = B side, 2n = source, 2n+1 = sink
    let src = 2 * n;
    let sink = 2 * n + 1;
    let mut net = Dinic::new(2 * n + 2);
    for (i, &d) in demand_a.iter().enumerate() {
        net.add_edge(src, i, d as i64);
    }
    for (i, &d) in demand_b.iter().enumerate() {
        net.add_edge(n + i, sink, d as i64);
    }
    let mut pair_edges = Vec::new();
    for i in 0..n {
        let u = class_a * n + i;
        for j in 0..n {
            let v = class_b * n + j;
            if g.has_edge(u, v) {
                let id = net.add_edge(i, n + j, 1);
                pair_edges.push((id, u, v));
            }
        }
    }
    let flow = net.max_flow(src, sink);
    if flow != sum_a as i64 {
        let side = net.min_cut_side(src);
        let cut_vertices: Vec<usize> = (0..n)
            .filter(|&i| side[i])
            .map(|i| class_a * n + i)
            .collect();
        return Err(FlowError::Infeasible {
            cut_side_a: cut_vertices.len(),
            cut_vertices,
        });
    }
    let chosen: Vec<(usize, usize)> = pair_edges
        .into_iter()
        .filter(|&(id, _, _)| net.cap[id] == 0)
        .map(|(_, u, v)| (u, v))
        .collect();
    // post-hoc: degrees equal demands exactly
    debug_assert!({
        let mut da = vec![0usize; n];
        let mut db = vec![0usize; n];
        for &(u, v) in &chosen {
            da[u - class_a * n] += 1;
            db[v - class_b * n] += 1;
        }
        da == demand_a && db == demand_b
    });
    Ok(chosen)
}

// ---------------------------------------------------------------------------
// Divisibility fixer
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixError {
    #[error("hat_delta {found} below the required (1/2 + 2*gamma/r) * n = {required}")]
    HypothesisViolated { found: usize, required: usize },
    #[error("cross-degree imbalance {found} at vertex {vertex} reaches the bound {bound}")]
    ImbalanceTooLarge { vertex: usize, found: usize, bound: usize },
    #[error("pair ({class_a},{class_b}) flow failed: {source}")]
    FlowInfeasible { class_a: usize, class_b: usize, source: FlowError },
    #[error("max_degree(H) = {found} exceeds gamma * n = {bound}")]
    DegreeBoundExceeded { found: usize, bound: usize },
}

#[derive(Clone, Debug)]
pub struct FixOutcome {
    /// The peeled bounded-degree graph.
    pub h: MultipartiteGraph,
    /// `g - h`, guaranteed K_r-divisible.
    pub g_prime: MultipartiteGraph,
    /// The exact per-(vertex, class) degree targets used for `h`.
    pub targets: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug)]
pub struct FixConfig {
    /// Bound assumed on cross-degree imbalances, as a fraction of n.
    pub alpha: f64,
    /// Whether to reject outputs with `max_degree(H) > gamma * n`. The
    /// degree-reduction step disables this and gates on its own final bound
    /// instead, since at small n the rounding terms can exceed `gamma*n/2`.
    pub enforce_degree_bound: bool,
    /// Whether to require `hat_delta >= (1/2 + 2*gamma/r) n` up front. This
    /// is the sufficient condition for the pair flows; with it disabled the
    /// flows simply surface infeasibility themselves.
    pub enforce_hypothesis: bool,
}

impl Default for FixConfig {
    fn default() -> Self {
        FixConfig {
            alpha: 0.2,
            enforce_degree_bound: true,
            enforce_hypothesis: true,
        }
    }
}

/// Peels `H` from `g` so that `g - H` is K_r-divisible and
/// `max_degree(H) <= gamma * n`. Requires `hat_delta(g) >= (1/2 + 2g/r) n`
/// and cross-degree imbalances below `alpha * n`.
///
/// The per-vertex targets follow the exact bookkeeping:
/// `m_v` = minimum cross-degree, `a_{v,j} = d(v,V_j) - m_v`,
/// `N_j = sum of m_v over V_j`, `M_j = N_j - min N`, `p_v` spreading `M_j`
/// as evenly as possible (excess to least vertex ids), and finally
/// `n_{v,j} = ceil(xi n) + a_{v,j} + p_v` with `xi = gamma / 2r`.
pub fn fix_divisibility(
    g: &MultipartiteGraph,
    gamma: f64,
    cfg: &FixConfig,
) -> Result<FixOutcome, FixError> {
    let r = g.class_count();
    let n = g.class_size();
    let required = ((0.5 + 2.0 * gamma / r as f64) * n as f64).ceil() as usize;
    if cfg.enforce_hypothesis && g.hat_delta() < required {
        return Err(FixError::HypothesisViolated {
            found: g.hat_delta(),
            required,
        });
    }
    let bound = (cfg.alpha * n as f64).ceil() as usize;
    let deg = |v: usize, j: usize| g.degree_into(v, j);
    for v in 0..g.vertex_count() {
        let cv = g.class_of(v);
        let ds: Vec<usize> = (0..r).filter(|&j| j != cv).map(|j| deg(v, j)).collect();
        let spread = ds.iter().max().unwrap() - ds.iter().min().unwrap();
        if spread >= bound.max(1) && spread > 0 && spread >= bound {
            return Err(FixError::ImbalanceTooLarge {
                vertex: v,
                found: spread,
                bound,
            });
        }
    }

    let m_v: Vec<usize> = (0..g.vertex_count())
        .map(|v| {
            let cv = g.class_of(v);
            (0..r)
                .filter(|&j| j != cv)
                .map(|j| deg(v, j))
                .min()
                .unwrap()
        })
        .collect();
    let n_j: Vec<usize> = (0..r)
        .map(|j| g.class_range(j).map(|v| m_v[v]).sum())
        .collect();
    let n_min = *n_j.iter().min().unwrap();
    let m_j: Vec<usize> = n_j.iter().map(|&x| x - n_min).collect();
    // p_v: distribute M_j as evenly as possible within class j, excess to
    // least vertex ids
    let mut p_v = vec![0usize; g.vertex_count()];
    for j in 0..r {
        let base = m_j[j] / n;
        let excess = m_j[j] % n;
        for (idx, v) in g.class_range(j).enumerate() {
            p_v[v] = base + usize::from(idx < excess);
        }
    }
    let xi = gamma / (2.0 * r as f64);
    let xi_n = (xi * n as f64).ceil() as usize;
    let targets: Vec<Vec<usize>> = (0..g.vertex_count())
        .map(|v| {
            let cv = g.class_of(v);
            (0..r)
                .map(|j| {
                    if j == cv {
                        0
                    } else {
                        xi_n + (deg(v, j) - m_v[v]) + p_v[v]
                    }
                })
                .collect()
        })
        .collect();

    let mut h = MultipartiteGraph::empty(r, n);
    for j1 in 0..r {
        for j2 in j1 + 1..r {
            // the pairwise demand sums must balance before any flow runs
            let sum_a: usize = g.class_range(j1).map(|v| targets[v][j2]).sum();
            let sum_b: usize = g.class_range(j2).map(|v| targets[v][j1]).sum();
            assert_eq!(
                sum_a, sum_b,
                "pairwise demand identity violated for pair ({j1},{j2})"
            );
            let demand_a: Vec<usize> = g.class_range(j1).map(|v| targets[v][j2]).collect();
            let demand_b: Vec<usize> = g.class_range(j2).map(|v| targets[v][j1]).collect();
            let edges = degree_constrained_subgraph(g, j1, j2, &demand_a, &demand_b)
                .map_err(|source| FixError::FlowInfeasible {
                    class_a: j1,
                    class_b: j2,
                    source,
                })?;
            for (u, v) in edges {
                h.insert_edge(u, v);
            }
        }
    }
    let g_prime = g.difference(&h);
    assert!(
        g_prime.is_kr_divisible(),
        "fixer output must be divisible; this is an internal error"
    );
    let gamma_n = (gamma * n as f64).floor() as usize;
    if cfg.enforce_degree_bound && h.max_degree() > gamma_n {
        return Err(FixError::DegreeBoundExceeded {
            found: h.max_degree(),
            bound: gamma_n,
        });
    }
    Ok(FixOutcome { h, g_prime, targets })
}

// ---------------------------------------------------------------------------
// Degree reduction
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("vertex {vertex}: no clique matching found in the reserved layer")]
    Stuck { vertex: usize },
    #[error("divisibility fix failed: {0}")]
    Fix(#[from] FixError),
    #[error("final remainder max degree {found} exceeds gamma*n = {bound}")]
    DegreeBoundMissed { found: usize, bound: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct ReduceConfig {
    /// Edge probability for the reserved random layer H_1.
    pub rho: f64,
    /// Matching search budget per repaired vertex.
    pub matching_budget: u64,
    /// Whole-run retries with a freshly sampled layer (seed-derived).
    pub retries: usize,
    pub fix: FixConfig,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            rho: 0.25,
            matching_budget: 200_000,
            retries: 12,
            fix: FixConfig {
                alpha: 2.0,
                enforce_degree_bound: false,
                enforce_hypothesis: false,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReduceOutcome {
    /// Uncovered remainder with `max_degree <= gamma * n`.
    pub remainder: MultipartiteGraph,
    /// Edge-disjoint cliques covering `g - remainder`.
    pub cover: Vec<Vec<usize>>,
    /// Vertices whose leftover degree exceeded the eta^(1/2) n threshold.
    pub repaired: Vec<usize>,
}

/// Desk-scale degree reduction: after this step `g` splits into an
/// edge-disjoint clique cover plus a remainder of maximum degree at most
/// `gamma * n`. Internally retries with a freshly sampled layer on failure,
/// deterministically in the seed.
pub fn reduce_degree(
    g: &MultipartiteGraph,
    eta: f64,
    gamma: f64,
    seed: u64,
    cfg: &ReduceConfig,
) -> Result<ReduceOutcome, ReduceError> {
    let mut last = None;
    for attempt in 0..cfg.retries.max(1) {
        let sub_seed = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(attempt as u64);
        match reduce_degree_once(g, eta, gamma, sub_seed, cfg) {
            Ok(out) => return Ok(out),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

fn reduce_degree_once(
    g: &MultipartiteGraph,
    eta: f64,
    gamma: f64,
    seed: u64,
    cfg: &ReduceConfig,
) -> Result<ReduceOutcome, ReduceError> {
    let r = g.class_count();
    let n = g.class_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // reserved random layer
    let mut h1 = MultipartiteGraph::empty(r, n);
    for (u, v) in g.edges() {
        if rng.random::<f64>() < cfg.rho {
            h1.insert_edge(u, v);
        }
    }
    let g1 = g.difference(&h1);
    // peel a divisibility fix only when needed; sparse divisible inputs
    // cannot support the uniform peel demands
    let divisible_part = if g1.is_kr_divisible() {
        g1.clone()
    } else {
        fix_divisibility(&g1, gamma / 2.0, &cfg.fix)?.g_prime
    };
    let approx = approx_decompose(&divisible_part, rng.random(), ApproxScore::Uniform);
    let threshold = (eta.sqrt() * n as f64).ceil() as usize;
    let busy: Vec<usize> = (0..g.vertex_count())
        .filter(|&v| approx.leftover.degree(v) > threshold)
        .collect();
    // keep only cliques avoiding busy vertices
    let kept: Vec<Vec<usize>> = approx
        .cliques
        .iter()
        .filter(|c| c.iter().all(|v| !busy.contains(v)))
        .cloned()
        .collect();
    let mut covered = MultipartiteGraph::empty(r, n);
    for c in &kept {
        for (i, &u) in c.iter().enumerate() {
            for &v in &c[i + 1..] {
                covered.insert_edge(u, v);
            }
        }
    }
    let mut cover = kept;
    // repair pass: cover edges at over-full vertices with cliques
    // {v} union K, where K is a clique matching inside the reserved layer
    // restricted to v's uncovered neighbourhood; iterate until the final
    // degree bound holds or no progress is possible
    let mut layer = h1.clone();
    let mut g3 = g.difference(&covered);
    let bound = (gamma * n as f64).floor() as usize;
    let mut queue: Vec<usize> = busy.clone();
    let mut repaired = busy.clone();
    loop {
        let mut progressed = false;
        for &v in &queue {
            if !repaired.contains(&v) {
                repaired.push(v);
            }
            let nbrs: Vec<usize> = g3.neighbors(v).to_vec();
            let keep = {
                let mut b = crate::bitset::BitSet::new(g.vertex_count());
                for &w in &nbrs {
                    b.insert(w);
                }
                b
            };
            let classes: Vec<usize> = (0..r).filter(|&j| j != g.class_of(v)).collect();
            let sets: Vec<Vec<usize>> = classes
                .iter()
                .map(|&j| nbrs.iter().copied().filter(|&w| g.class_of(w) == j).collect())
                .collect();
            // reserved-layer edges first; if the layer around v is exhausted,
            // fall back to any still-uncovered edges between the neighbours
            let inside = layer.intersection_edges(&g3).induced(&keep);
            let mut matching = cover::greedy_clique_matching(
                &inside,
                &sets,
                r - 1,
                rng.random(),
                cfg.matching_budget,
            );
            if matching.is_empty() {
                let wide = g3.induced(&keep);
                matching = cover::greedy_clique_matching(
                    &wide,
                    &sets,
                    r - 1,
                    rng.random(),
                    cfg.matching_budget,
                );
            }
            for k in matching {
                let mut clique = k.clone();
                clique.push(v);
                clique.sort_unstable();
                for (i, &a) in clique.iter().enumerate() {
                    for &b in &clique[i + 1..] {
                        debug_assert!(g3.has_edge(a, b));
                        covered.insert_edge(a, b);
                        g3.delete_edge(a, b);
                        layer.delete_edge(a, b);
                    }
                }
                cover.push(clique);
                progressed = true;
            }
        }
        let mut over: Vec<usize> = (0..g.vertex_count())
            .filter(|&v| g3.degree(v) > bound)
            .collect();
        if over.is_empty() {
            break;
        }
        if !progressed {
            return Err(ReduceError::Stuck { vertex: over[0] });
        }
        over.sort_by_key(|&v| std::cmp::Reverse(g3.degree(v)));
        queue = over;
    }
    let remainder = g.difference(&covered);
    debug_assert_eq!(remainder.edges(), g3.edges());
    if remainder.max_degree() > bound {
        return Err(ReduceError::DegreeBoundMissed {
            found: remainder.max_degree(),
            bound,
        });
    }
    Ok(ReduceOutcome {
        remainder,
        cover,
        repaired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_matching_demand() {
        let g = MultipartiteGraph::complete(2, 2);
        let edges = degree_constrained_subgraph(&g, 0, 1, &[1, 1], &[1, 1]).unwrap();
        assert_eq!(edges.len(), 2);
    }

    #[test]
    fn isolated_vertex_demand_is_infeasible_with_cut() {
        // only edge a1-b1 present; a2 and b2 isolated but demanding degree 1
        let g = MultipartiteGraph::from_edges(2, 2, [(0, 2)]).unwrap();
        match degree_constrained_subgraph(&g, 0, 1, &[1, 1], &[1, 1]) {
            Err(FlowError::Infeasible { cut_vertices, .. }) => {
                assert!(cut_vertices.contains(&1), "cut must expose the isolated a2");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbalanced_demand_rejected() {
        let g = MultipartiteGraph::complete(2, 2);
        assert!(matches!(
            degree_constrained_subgraph(&g, 0, 1, &[1, 1], &[2, 1]),
            Err(FlowError::UnbalancedDemand { .. })
        ));
    }

    #[test]
    fn random_bipartite_uniform_demand() {
        // dense 10x10 bipartite pair, all demands 2
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut g = MultipartiteGraph::empty(2, 10);
        for u in 0..10 {
            for v in 10..20 {
                if rng.random::<f64>() < 0.8 {
                    g.insert_edge(u, v);
                }
            }
        }
        if g.hat_delta() >= 7 {
            let d = vec![2usize; 10];
            let edges = degree_constrained_subgraph(&g, 0, 1, &d, &d).unwrap();
            assert_eq!(edges.len(), 20);
        }
    }

    #[test]
    fn fixer_on_already_divisible_host() {
        let g = MultipartiteGraph::complete(3, 9);
        let out = fix_divisibility(&g, 0.4, &FixConfig::default()).unwrap();
        assert!(out.g_prime.is_kr_divisible());
        // a = p = 0 everywhere, so H is exactly ceil(xi n)-regular per pair
        let xi_n = (0.4 / 6.0 * 9.0_f64).ceil() as usize;
        for v in 0..g.vertex_count() {
            for j in 0..3 {
                if j != g.class_of(v) {
                    assert_eq!(out.h.degree_into(v, j), xi_n);
                }
            }
        }
    }

    #[test]
    fn fixer_repairs_rotated_defects() {
        // remove one edge per class pair, rotated so the per-class m_v sums
        // stay equal; the graph is imbalanced but the fixer bound holds
        let n = 6;
        let mut g = MultipartiteGraph::complete(3, n);
        g.delete_edge(0, n);
        g.delete_edge(n + 1, 2 * n + 1);
        g.delete_edge(2 * n + 2, 2);
        assert!(!g.is_kr_divisible());
        let out = fix_divisibility(&g, 0.5, &FixConfig::default()).unwrap();
        assert!(out.g_prime.is_kr_divisible());
        assert!(out.h.max_degree() <= 3);
        // degrees in H match the computed targets exactly
        for v in 0..g.vertex_count() {
            for j in 0..3 {
                assert_eq!(out.h.degree_into(v, j), out.targets[v][j]);
            }
        }
    }

    #[test]
    fn fixer_matching_removal_degree_bound_is_instance_dependent() {
        // removing a whole perfect matching between two classes skews the
        // per-class sums; the p_v correction then makes H exceed gamma*n at
        // this tiny size, which must surface as an explicit error
        let mut g = MultipartiteGraph::complete(3, 6);
        for t in 0..6 {
            g.delete_edge(t, 6 + t);
        }
        match fix_divisibility(&g, 0.5, &FixConfig::default()) {
            Ok(out) => assert!(out.g_prime.is_kr_divisible()),
            Err(FixError::DegreeBoundExceeded { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
        // with the bound check relaxed the repair itself always succeeds
        let cfg = FixConfig { alpha: 0.5, enforce_degree_bound: false, enforce_hypothesis: true };
        let out = fix_divisibility(&g, 0.5, &cfg).unwrap();
        assert!(out.g_prime.is_kr_divisible());
    }

    #[test]
    fn fixer_hypothesis_gate() {
        let g = MultipartiteGraph::empty(3, 4);
        assert!(matches!(
            fix_divisibility(&g, 0.4, &FixConfig::default()),
            Err(FixError::HypothesisViolated { .. })
        ));
    }

    #[test]
    fn reduce_degree_on_complete_host() {
        let g = MultipartiteGraph::complete(3, 6);
        let mut successes = 0;
        for seed in 0..12 {
            if let Ok(out) = reduce_degree(&g, 0.1, 0.5, seed, &ReduceConfig::default()) {
                successes += 1;
                assert!(out.remainder.max_degree() <= 3);
                // cover + remainder account for every edge exactly once
                let mut covered = MultipartiteGraph::empty(3, 6);
                for c in &out.cover {
                    for (i, &u) in c.iter().enumerate() {
                        for &v in &c[i + 1..] {
                            assert!(!covered.has_edge(u, v));
                            covered.insert_edge(u, v);
                        }
                    }
                }
                assert_eq!(
                    covered.edge_count() + out.remainder.edge_count(),
                    g.edge_count()
                );
            }
        }
        assert!(successes > 0, "at least one seed should succeed");
    }

    #[test]
    fn reduce_degree_stuck_with_empty_layer() {
        // rho = 0 leaves no reserved edges; busy vertices cannot be repaired
        let g = MultipartiteGraph::complete(3, 6);
        let cfg = ReduceConfig { rho: 0.0, ..ReduceConfig::default() };
        let mut saw_failure = false;
        for seed in 0..6 {
            match reduce_degree(&g, 0.001, 0.2, seed, &cfg) {
                Err(_) => saw_failure = true,
                Ok(out) => assert!(out.remainder.max_degree() <= 1),
            }
        }
        assert!(saw_failure, "tiny eta with an empty layer must fail somewhere");
    }
}
