//! Fractional K_r-decomposition by exact rational LP, and a seeded greedy
//! approximate decomposer.
//!
//! A fractional decomposition assigns a nonnegative weight to every
//! transversal clique so that the weights covering each edge sum to exactly
//! 1. Feasibility is decided in exact arithmetic so the "exactly 1"
//! invariant is assertable with no tolerance; infeasibility comes with a
//! Farkas certificate over the edges.

use crate::graph::MultipartiteGraph;
use crate::simplex::{self, FeasibilityOutcome};
pub use crate::simplex::Rat;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug)]
pub struct FractionalDecomposition {
    /// Cliques paired with their (possibly zero) weights.
    pub weights: Vec<(Vec<usize>, Rat)>,
}

impl FractionalDecomposition {
    /// Cliques carrying nonzero weight.
    pub fn support(&self) -> Vec<(&Vec<usize>, &Rat)> {
        self.weights
            .iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(c, w)| (c, w))
            .collect()
    }

    /// Exact check: for every host edge the incident weights sum to 1.
    pub fn verify(&self, g: &MultipartiteGraph) -> bool {
        let edges = g.edges();
        let index: std::collections::BTreeMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut sums = vec![Rat::zero(); edges.len()];
        for (clique, w) in &self.weights {
            if w.is_negative() {
                return false;
            }
            for (i, &u) in clique.iter().enumerate() {
                for &v in &clique[i + 1..] {
                    let key = (u.min(v), u.max(v));
                    match index.get(&key) {
                        Some(&ei) => sums[ei] += w,
                        None => return false,
                    }
                }
            }
        }
        sums.iter().all(|s| s.is_one())
    }
}

/// Farkas dual over the edges: for every clique the incident dual values sum
/// to at most 0, while the total over all edges is positive.
#[derive(Clone, Debug)]
pub struct FarkasCertificate {
    pub edge_weights: Vec<((usize, usize), Rat)>,
}

impl FarkasCertificate {
    pub fn verify(&self, g: &MultipartiteGraph) -> bool {
        let lookup: std::collections::BTreeMap<(usize, usize), &Rat> =
            self.edge_weights.iter().map(|(e, w)| (*e, w)).collect();
        let mut total = Rat::zero();
        for (e, w) in &self.edge_weights {
            if !g.has_edge(e.0, e.1) {
                return false;
            }
            total += w;
        }
        if !total.is_positive() {
            return false;
        }
        for clique in g.enumerate_r_cliques() {
            let mut s = Rat::zero();
            for (i, &u) in clique.iter().enumerate() {
                for &v in &clique[i + 1..] {
                    s += *lookup.get(&(u.min(v), u.max(v))).unwrap();
                }
            }
            if s.is_positive() {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug)]
pub enum FractionalOutcome {
    Feasible(FractionalDecomposition),
    Infeasible(FarkasCertificate),
}

#[derive(Clone, Copy, Debug)]
pub struct FractionalConfig {
    /// Refuse instances with more cliques than this (LP dimension cap).
    pub max_cliques: usize,
}

impl Default for FractionalConfig {
    fn default() -> Self {
        FractionalConfig { max_cliques: 20_000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FractionalError {
    #[error("instance has {cliques} cliques, exceeding the configured cap {cap}")]
    DimensionTooLarge { cliques: usize, cap: usize },
}

/// Decides fractional K_r-decomposability of `g` by exact LP feasibility:
/// one variable per transversal clique, one equality constraint per edge.
pub fn fractional_decompose(
    g: &MultipartiteGraph,
    cfg: &FractionalConfig,
) -> Result<FractionalOutcome, FractionalError> {
    let cliques = g.enumerate_r_cliques();
    if cliques.len() > cfg.max_cliques {
        return Err(FractionalError::DimensionTooLarge {
            cliques: cliques.len(),
            cap: cfg.max_cliques,
        });
    }
    let edges = g.edges();
    let edge_index: std::collections::BTreeMap<(usize, usize), usize> =
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let columns: Vec<Vec<(usize, Rat)>> = cliques
        .iter()
        .map(|c| {
            let mut col = Vec::new();
            for (i, &u) in c.iter().enumerate() {
                for &v in &c[i + 1..] {
                    col.push((edge_index[&(u.min(v), u.max(v))], Rat::one()));
                }
            }
            col
        })
        .collect();
    let b = vec![Rat::one(); edges.len()];
    match simplex::solve_feasibility(edges.len(), &columns, &b) {
        FeasibilityOutcome::Feasible(x) => {
            let weights = cliques.into_iter().zip(x).collect();
            let fd = FractionalDecomposition { weights };
            debug_assert!(fd.verify(g));
            Ok(FractionalOutcome::Feasible(fd))
        }
        FeasibilityOutcome::Infeasible(y) => {
            let cert = FarkasCertificate {
                edge_weights: edges.into_iter().zip(y).collect(),
            };
            Ok(FractionalOutcome::Infeasible(cert))
        }
    }
}

/// Result of the greedy approximate decomposer.
#[derive(Clone, Debug)]
pub struct ApproxResult {
    pub cliques: Vec<Vec<usize>>,
    pub leftover: MultipartiteGraph,
    /// `e(leftover) / n^2`.
    pub leftover_ratio: f64,
}

/// Clique selection rule for [`approx_decompose`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum ApproxScore {
    /// Uniformly random among all currently available cliques.
    #[default]
    Uniform,
    /// Among cliques conflicting with the fewest other available cliques.
    LeastConflicting,
}

/// Repeatedly removes a random transversal clique until none remain.
/// Deterministic for a fixed seed.
pub fn approx_decompose(g: &MultipartiteGraph, seed: u64, score: ApproxScore) -> ApproxResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = g.clone();
    let mut alive = g.enumerate_r_cliques();
    let mut chosen = Vec::new();
    while !alive.is_empty() {
        let pick = match score {
            ApproxScore::Uniform => rand::Rng::random_range(&mut rng, 0..alive.len()),
            ApproxScore::LeastConflicting => {
                let conflicts: Vec<usize> = alive
                    .iter()
                    .map(|c| alive.iter().filter(|o| cliques_share_edge(c, o)).count())
                    .collect();
                let best = conflicts.iter().min().copied().unwrap();
                let ties: Vec<usize> =
                    (0..alive.len()).filter(|&i| conflicts[i] == best).collect();
                ties[rand::Rng::random_range(&mut rng, 0..ties.len())]
            }
        };
        let clique = alive.swap_remove(pick);
        for (i, &u) in clique.iter().enumerate() {
            for &v in &clique[i + 1..] {
                remaining.delete_edge(u, v);
            }
        }
        alive.retain(|c| clique_edges_alive(&remaining, c));
        chosen.push(clique);
    }
    let n = g.class_size();
    let ratio = remaining.edge_count() as f64 / (n * n) as f64;
    ApproxResult {
        cliques: chosen,
        leftover: remaining,
        leftover_ratio: ratio,
    }
}

fn cliques_share_edge(a: &[usize], b: &[usize]) -> bool {
    a.iter().filter(|v| b.contains(v)).count() >= 2
}

fn clique_edges_alive(g: &MultipartiteGraph, c: &[usize]) -> bool {
    for (i, &u) in c.iter().enumerate() {
        for &v in &c[i + 1..] {
            if !g.has_edge(u, v) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_decompose;
    use crate::extremal::{build_extremal, leftover_lower_bound, ExtremalParams};

    #[test]
    fn complete_host_is_fractionally_feasible() {
        // uniform weight 1/n on every triangle works; the solver returns some
        // feasible point, verified exactly
        for n in [2, 3] {
            let g = MultipartiteGraph::complete(3, n);
            match fractional_decompose(&g, &FractionalConfig::default()).unwrap() {
                FractionalOutcome::Feasible(fd) => assert!(fd.verify(&g)),
                FractionalOutcome::Infeasible(_) => panic!("K_nnn must be feasible"),
            }
        }
    }

    #[test]
    fn edge_without_cliques_infeasible() {
        // extremal q=0 instance: edges exist but no transversal cliques
        let p = ExtremalParams { r: 3, m: 2, q: 0 };
        let g = build_extremal(&p, 0).unwrap();
        match fractional_decompose(&g, &FractionalConfig::default()).unwrap() {
            FractionalOutcome::Infeasible(cert) => assert!(cert.verify(&g)),
            FractionalOutcome::Feasible(_) => panic!("must be infeasible"),
        }
    }

    #[test]
    fn extremal_q0_fractionally_infeasible() {
        let p = ExtremalParams { r: 3, m: 3, q: ExtremalParams::q0(3, 3) };
        let g = build_extremal(&p, 0).unwrap();
        match fractional_decompose(&g, &FractionalConfig::default()).unwrap() {
            FractionalOutcome::Infeasible(cert) => assert!(cert.verify(&g)),
            FractionalOutcome::Feasible(_) => panic!("must be infeasible"),
        }
    }

    #[test]
    fn exact_decomposability_implies_fractional_feasibility() {
        let g = MultipartiteGraph::complete(3, 3);
        assert!(exact_decompose(&g, 1_000_000).decomposition().is_some());
        assert!(matches!(
            fractional_decompose(&g, &FractionalConfig::default()).unwrap(),
            FractionalOutcome::Feasible(_)
        ));
    }

    #[test]
    fn approx_on_cliquefree_graph_returns_everything() {
        let p = ExtremalParams { r: 3, m: 2, q: 0 };
        let g = build_extremal(&p, 0).unwrap();
        let res = approx_decompose(&g, 1, ApproxScore::Uniform);
        assert!(res.cliques.is_empty());
        assert_eq!(res.leftover.edge_count(), g.edge_count());
    }

    #[test]
    fn approx_deterministic_and_respects_extremal_bound() {
        let p = ExtremalParams { r: 3, m: 4, q: 1 };
        let g = build_extremal(&p, 0).unwrap();
        let bound = leftover_lower_bound(&p).to_integer() as usize;
        for seed in 0..20 {
            let res = approx_decompose(&g, seed, ApproxScore::Uniform);
            assert!(res.leftover.edge_count() >= bound, "leftover below extremal bound");
            let res2 = approx_decompose(&g, seed, ApproxScore::Uniform);
            assert_eq!(res.cliques, res2.cliques);
        }
    }

    #[test]
    fn approx_can_reach_zero_on_k333() {
        let g = MultipartiteGraph::complete(3, 3);
        let min = (0..40)
            .map(|s| approx_decompose(&g, s, ApproxScore::Uniform).leftover.edge_count())
            .min()
            .unwrap();
        assert_eq!(min, 0, "a perfect cover exists and some seed should find it");
    }

    #[test]
    fn dimension_cap_enforced() {
        let g = MultipartiteGraph::complete(3, 3);
        let err = fractional_decompose(&g, &FractionalConfig { max_cliques: 5 }).unwrap_err();
        assert!(matches!(err, FractionalError::DimensionTooLarge { .. }));
    }
}
