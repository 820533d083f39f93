//! Exact backtracking K_r-decomposer.
//!
//! Ground-truth oracle for the whole crate. Branches on the
//! lexicographically least uncovered edge and iterates candidate cliques in
//! deterministic order, so `Infeasible` certificates are reproducible. The
//! budget unit is the number of clique placements attempted.

use crate::graph::{CliqueDecomposition, MultipartiteGraph};
use serde::{Deserialize, Serialize};

/// Why a search concluded there is no decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfeasibilityReason {
    /// A vertex with unequal cross-degrees (divisibility precheck).
    DivisibilityDefect { vertex: usize, class_a: usize, class_b: usize },
    /// Total edge count not divisible by r(r-1)/2.
    EdgeCountIndivisible { edges: usize, clique_edges: usize },
    /// The full search tree below the branch edge was exhausted.
    SearchExhausted { branch_edge: (usize, usize), placements: u64 },
}

/// Proof artifact attached to an `Infeasible` outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub reason: InfeasibilityReason,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecomposeOutcome {
    Decomposed(CliqueDecomposition),
    Infeasible(InfeasibilityCertificate),
    /// The placement budget was hit; explicitly not a feasibility verdict.
    BudgetExhausted { placements: u64 },
}

impl DecomposeOutcome {
    pub fn decomposition(self) -> Option<CliqueDecomposition> {
        match self {
            DecomposeOutcome::Decomposed(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, DecomposeOutcome::Infeasible(_))
    }
}

struct Search {
    g: MultipartiteGraph,
    chosen: Vec<Vec<usize>>,
    placements: u64,
    budget: u64,
    out_of_budget: bool,
}

enum Step {
    Done,
    Dead,
    Budget,
}

impl Search {
    /// Least uncovered edge in lexicographic order.
    fn least_edge(&self) -> Option<(usize, usize)> {
        for u in 0..self.g.vertex_count() {
            if let Some(v) = self.g.neighbors(u).iter().find(|&v| v > u) {
                return Some((u, v));
            }
        }
        None
    }

    fn run(&mut self) -> Step {
        let Some((u, v)) = self.least_edge() else {
            return Step::Done;
        };
        let candidates = self.g.cliques_through_edge(u, v);
        for clique in candidates {
            if self.placements >= self.budget {
                self.out_of_budget = true;
                return Step::Budget;
            }
            self.placements += 1;
            self.remove_clique(&clique);
            self.chosen.push(clique.clone());
            match self.run() {
                Step::Done => return Step::Done,
                Step::Budget => return Step::Budget,
                Step::Dead => {
                    self.chosen.pop();
                    self.restore_clique(&clique);
                }
            }
        }
        Step::Dead
    }

    fn remove_clique(&mut self, c: &[usize]) {
        for (i, &a) in c.iter().enumerate() {
            for &b in &c[i + 1..] {
                self.g.delete_edge(a, b);
            }
        }
    }

    fn restore_clique(&mut self, c: &[usize]) {
        for (i, &a) in c.iter().enumerate() {
            for &b in &c[i + 1..] {
                self.g.insert_edge(a, b);
            }
        }
    }
}

/// Attempts a complete K_r-decomposition of `g` within `budget` clique
/// placements. Deterministic: identical inputs yield identical outcomes.
pub fn exact_decompose(g: &MultipartiteGraph, budget: u64) -> DecomposeOutcome {
    let r = g.class_count();
    let clique_edges = r * (r - 1) / 2;
    if g.edge_count() % clique_edges != 0 {
        return DecomposeOutcome::Infeasible(InfeasibilityCertificate {
            reason: InfeasibilityReason::EdgeCountIndivisible {
                edges: g.edge_count(),
                clique_edges,
            },
        });
    }
    if let Some((v, a, b)) = g.divisibility_defect() {
        return DecomposeOutcome::Infeasible(InfeasibilityCertificate {
            reason: InfeasibilityReason::DivisibilityDefect {
                vertex: v,
                class_a: a,
                class_b: b,
            },
        });
    }
    let branch_edge = {
        let mut found = None;
        'outer: for u in 0..g.vertex_count() {
            for v in g.neighbors(u).iter() {
                if v > u {
                    found = Some((u, v));
                    break 'outer;
                }
            }
        }
        found
    };
    let Some(branch_edge) = branch_edge else {
        return DecomposeOutcome::Decomposed(CliqueDecomposition::new(Vec::new()));
    };
    let mut search = Search {
        g: g.clone(),
        chosen: Vec::new(),
        placements: 0,
        budget,
        out_of_budget: false,
    };
    match search.run() {
        Step::Done => DecomposeOutcome::Decomposed(CliqueDecomposition::new(search.chosen)),
        Step::Budget => DecomposeOutcome::BudgetExhausted {
            placements: search.placements,
        },
        Step::Dead => {
            debug_assert!(!search.out_of_budget);
            DecomposeOutcome::Infeasible(InfeasibilityCertificate {
                reason: InfeasibilityReason::SearchExhausted {
                    branch_edge,
                    placements: search.placements,
                },
            })
        }
    }
}
