//! Lower-bound host graphs used as hard and negative test instances.
//!
//! `G_q` is the intersection of the complete r-partite graph on
//! `(V_1,...,V_r)` with the complete (r-1)-partite graph on blocks
//! `(U^1,...,U^{r-1})`, plus a q-regular bipartite graph between every pair
//! of slices inside each block. It is regular and K_r-divisible, yet for
//! `q <= q0` it has no K_r-decomposition: every transversal clique must use
//! a block-internal edge, and there are not enough of them.

use crate::graph::MultipartiteGraph;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalParams {
    /// Class count, at least 3.
    pub r: usize,
    /// Block size; the class size is `n = (r-1) * m`.
    pub m: usize,
    /// Regularity of the block-internal layers, `0 <= q <= m`.
    pub q: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtremalError {
    #[error("r must be at least 3, got {0}")]
    RTooSmall(usize),
    #[error("q = {q} exceeds block size m = {m}")]
    QTooLarge { q: usize, m: usize },
}

impl ExtremalParams {
    pub fn validate(&self) -> Result<(), ExtremalError> {
        if self.r < 3 {
            return Err(ExtremalError::RTooSmall(self.r));
        }
        if self.q > self.m {
            return Err(ExtremalError::QTooLarge { q: self.q, m: self.m });
        }
        Ok(())
    }

    pub fn class_size(&self) -> usize {
        (self.r - 1) * self.m
    }

    /// The largest q for which the leftover bound stays positive:
    /// `ceil(2m/(r+1)) - 1`.
    pub fn q0(r: usize, m: usize) -> usize {
        (2 * m).div_ceil(r + 1).saturating_sub(1)
    }
}

/// Block index of vertex `v` (which of `U^1..U^{r-1}` it lies in).
fn block_of(params: &ExtremalParams, g: &MultipartiteGraph, v: usize) -> usize {
    let within = v - g.class_of(v) * g.class_size();
    within / params.m
}

/// Builds `G_q`. Deterministic for a fixed seed; the q-regular bipartite
/// layers are realized as q rotations of a cyclic matching, with the seed
/// reserved for optional shuffling of block contents (unused by default).
pub fn build_extremal(params: &ExtremalParams, _seed: u64) -> Result<MultipartiteGraph, ExtremalError> {
    params.validate()?;
    let r = params.r;
    let m = params.m;
    let n = params.class_size();
    let mut g = MultipartiteGraph::empty(r, n);
    // G_0: cross-class edges between distinct blocks
    for u in 0..g.vertex_count() {
        for v in u + 1..g.vertex_count() {
            if g.class_of(u) != g.class_of(v) && block_of(params, &g, u) != block_of(params, &g, v)
            {
                g.insert_edge(u, v);
            }
        }
    }
    // H_q: q rotations of a cyclic perfect matching between each pair of
    // slices inside each block
    for block in 0..r - 1 {
        for j1 in 0..r {
            for j2 in j1 + 1..r {
                for s in 0..params.q {
                    for t in 0..m {
                        let u = j1 * n + block * m + t;
                        let v = j2 * n + block * m + (t + s) % m;
                        g.insert_edge(u, v);
                    }
                }
            }
        }
    }
    Ok(g)
}

/// The block-internal layer `H_q` alone (useful for clique-scan checks).
pub fn extremal_inner_layer(params: &ExtremalParams) -> Result<MultipartiteGraph, ExtremalError> {
    params.validate()?;
    let full = build_extremal(params, 0)?;
    let zero = build_extremal(&ExtremalParams { q: 0, ..*params }, 0)?;
    Ok(full.difference(&zero))
}

/// Exact lower bound on the number of edges any edge-disjoint K_r-collection
/// leaves uncovered in `G_q`:
/// `(m - (r+1)q/2) * (r-2) * C(r,2) * n`, evaluated in rationals. Negative
/// values mean the bound gives no obstruction.
pub fn leftover_lower_bound(params: &ExtremalParams) -> Rational64 {
    let r = params.r as i64;
    let m = params.m as i64;
    let q = params.q as i64;
    let n = ((params.r - 1) * params.m) as i64;
    let head = Rational64::new(2 * m - (r + 1) * q, 2);
    head * Rational64::from_integer((r - 2) * (r * (r - 1) / 2) * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_decompose, DecomposeOutcome};
    use num_traits::Zero;

    #[test]
    fn q0_matches_formula() {
        assert_eq!(ExtremalParams::q0(3, 4), 1);
        assert_eq!(ExtremalParams::q0(3, 2), 0);
        assert_eq!(ExtremalParams::q0(4, 5), 1);
    }

    #[test]
    fn extremal_is_regular_and_divisible() {
        for (r, m, q) in [(3, 2, 0), (3, 4, 1), (3, 4, 2), (4, 2, 1)] {
            let p = ExtremalParams { r, m, q };
            let g = build_extremal(&p, 0).unwrap();
            assert!(g.is_kr_divisible(), "G_q must be divisible for {p:?}");
            let expected = (r - 2) * m + q;
            assert_eq!(g.hat_delta(), expected, "hat_delta formula for {p:?}");
            // regular: every vertex has the same total degree
            let d0 = g.degree(0);
            assert!((0..g.vertex_count()).all(|v| g.degree(v) == d0));
        }
    }

    #[test]
    fn q0_instance_m4_hat_delta() {
        // r=3, m=4 (n=8), q0=1: hat_delta = (r-2)m + q0 = 5 = ceil(3/4 * 8) - 1
        let p = ExtremalParams { r: 3, m: 4, q: ExtremalParams::q0(3, 4) };
        let g = build_extremal(&p, 0).unwrap();
        assert_eq!(g.hat_delta(), 5);
    }

    #[test]
    fn q_zero_has_no_transversal_cliques() {
        let p = ExtremalParams { r: 3, m: 2, q: 0 };
        let g = build_extremal(&p, 0).unwrap();
        assert_eq!(g.hat_delta(), 2);
        assert!(g.enumerate_r_cliques().is_empty());
    }

    #[test]
    fn every_clique_uses_an_inner_edge() {
        let p = ExtremalParams { r: 3, m: 3, q: 1 };
        let g = build_extremal(&p, 0).unwrap();
        let inner = extremal_inner_layer(&p).unwrap();
        for c in g.enumerate_r_cliques() {
            let mut hits = 0;
            for (i, &u) in c.iter().enumerate() {
                for &v in &c[i + 1..] {
                    if inner.has_edge(u, v) {
                        hits += 1;
                    }
                }
            }
            assert!(hits >= 1, "clique {c:?} avoids the inner layer");
        }
    }

    #[test]
    fn leftover_bound_values() {
        assert_eq!(
            leftover_lower_bound(&ExtremalParams { r: 3, m: 4, q: 1 }),
            Rational64::from_integer(48)
        );
        assert_eq!(
            leftover_lower_bound(&ExtremalParams { r: 4, m: 5, q: 1 }),
            Rational64::from_integer(450)
        );
        // root of the formula: q = 2m/(r+1) exactly
        assert!(leftover_lower_bound(&ExtremalParams { r: 3, m: 2, q: 1 }).is_zero());
    }

    #[test]
    fn small_q0_instance_is_infeasible() {
        let p = ExtremalParams { r: 3, m: 2, q: ExtremalParams::q0(3, 2) };
        let g = build_extremal(&p, 0).unwrap();
        match exact_decompose(&g, 1_000_000) {
            DecomposeOutcome::Infeasible(_) => {}
            other => panic!("G_q0 must be infeasible, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = ExtremalParams { r: 3, m: 3, q: 2 };
        assert_eq!(build_extremal(&p, 7).unwrap(), build_extremal(&p, 7).unwrap());
    }
}
