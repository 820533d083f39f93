//! The r-partite graph model: divisibility and degree predicates, clique
//! enumeration and decomposition verification.
//!
//! Vertices are global integers `0..r*n`; vertex `v` belongs to class
//! `v / n`. Intra-class edges are a construction-time error, never a runtime
//! state. Instances are immutable once built; algorithms that need scratch
//! space clone and use the crate-internal mutators.

use crate::bitset::BitSet;
use crate::par;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {0} out of range (vertex count {1})")]
    VertexOutOfRange(usize, usize),
    #[error("edge ({0},{1}) joins two vertices of class {2}")]
    IntraClassEdge(usize, usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("class count must be at least 2, got {0}")]
    TooFewClasses(usize),
}

/// A balanced r-partite graph: `r` classes of `n` vertices each, bit-set
/// adjacency rows, no intra-class edges.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultipartiteGraph {
    r: usize,
    n: usize,
    adj: Vec<BitSet>,
}

impl MultipartiteGraph {
    /// The empty graph on `r` classes of size `n`.
    pub fn empty(r: usize, n: usize) -> Self {
        assert!(r >= 2, "need at least 2 classes");
        MultipartiteGraph {
            r,
            n,
            adj: vec![BitSet::new(r * n); r * n],
        }
    }

    /// The complete balanced r-partite graph.
    pub fn complete(r: usize, n: usize) -> Self {
        let mut g = Self::empty(r, n);
        for u in 0..r * n {
            for v in u + 1..r * n {
                if g.class_of(u) != g.class_of(v) {
                    g.insert_edge(u, v);
                }
            }
        }
        g
    }

    pub fn from_edges(
        r: usize,
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if r < 2 {
            return Err(GraphError::TooFewClasses(r));
        }
        let mut g = Self::empty(r, n);
        for (u, v) in edges {
            g.try_insert_edge(u, v)?;
        }
        Ok(g)
    }

    pub(crate) fn try_insert_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        let vc = self.vertex_count();
        if u >= vc {
            return Err(GraphError::VertexOutOfRange(u, vc));
        }
        if v >= vc {
            return Err(GraphError::VertexOutOfRange(v, vc));
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if self.class_of(u) == self.class_of(v) {
            return Err(GraphError::IntraClassEdge(u, v, self.class_of(u)));
        }
        self.insert_edge(u, v);
        Ok(())
    }

    pub(crate) fn insert_edge(&mut self, u: usize, v: usize) {
        debug_assert_ne!(self.class_of(u), self.class_of(v));
        self.adj[u].insert(v);
        self.adj[v].insert(u);
    }

    pub(crate) fn delete_edge(&mut self, u: usize, v: usize) {
        self.adj[u].remove(v);
        self.adj[v].remove(u);
    }

    pub fn class_count(&self) -> usize {
        self.r
    }

    pub fn class_size(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.r * self.n
    }

    #[inline]
    pub fn class_of(&self, v: usize) -> usize {
        v / self.n
    }

    /// Global vertex ids of class `j`.
    pub fn class_range(&self, j: usize) -> std::ops::Range<usize> {
        j * self.n..(j + 1) * self.n
    }

    /// Bit mask of the vertices in class `j`.
    pub fn class_mask(&self, j: usize) -> BitSet {
        let mut m = BitSet::new(self.vertex_count());
        m.insert_range(self.class_range(j));
        m
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    pub fn neighbors(&self, v: usize) -> &BitSet {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count()
    }

    /// `d(v, V_j)`: neighbours of `v` inside class `j`.
    pub fn degree_into(&self, v: usize, j: usize) -> usize {
        self.class_range(j)
            .filter(|&w| self.adj[v].contains(w))
            .count()
    }

    /// Common neighbourhood of a vertex set, restricted to class `j`.
    pub fn common_neighbors_in_class(&self, verts: &[usize], j: usize) -> BitSet {
        let mut acc = self.class_mask(j);
        for &v in verts {
            acc.and_with(&self.adj[v]);
        }
        acc
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|row| row.count()).sum::<usize>() / 2
    }

    /// All edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.vertex_count() {
            for v in self.adj[u].iter() {
                if v > u {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Edge-set union (same vertex universe).
    pub fn union(&self, other: &MultipartiteGraph) -> MultipartiteGraph {
        assert_eq!((self.r, self.n), (other.r, other.n));
        let mut g = self.clone();
        for (row, o) in g.adj.iter_mut().zip(&other.adj) {
            row.or_with(o);
        }
        g
    }

    /// Edge-set difference `self - other` (same vertex universe).
    pub fn difference(&self, other: &MultipartiteGraph) -> MultipartiteGraph {
        assert_eq!((self.r, self.n), (other.r, other.n));
        let mut g = self.clone();
        for (row, o) in g.adj.iter_mut().zip(&other.adj) {
            row.subtract(o);
        }
        g
    }

    pub fn intersection_edges(&self, other: &MultipartiteGraph) -> MultipartiteGraph {
        assert_eq!((self.r, self.n), (other.r, other.n));
        let mut g = self.clone();
        for (row, o) in g.adj.iter_mut().zip(&other.adj) {
            row.and_with(o);
        }
        g
    }

    pub fn is_edge_subset_of(&self, other: &MultipartiteGraph) -> bool {
        self.adj
            .iter()
            .zip(&other.adj)
            .all(|(row, o)| row.intersection(o) == *row)
    }

    pub fn is_edge_disjoint_from(&self, other: &MultipartiteGraph) -> bool {
        self.adj
            .iter()
            .zip(&other.adj)
            .all(|(row, o)| !row.intersects(o))
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count())
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    /// Subgraph keeping only edges with both endpoints in `keep`.
    pub fn induced(&self, keep: &BitSet) -> MultipartiteGraph {
        let mut g = self.clone();
        for v in 0..self.vertex_count() {
            if keep.contains(v) {
                g.adj[v].and_with(keep);
            } else {
                g.adj[v].clear();
            }
        }
        // restore symmetry for removed rows
        for v in 0..self.vertex_count() {
            if !keep.contains(v) {
                let nbrs: Vec<usize> = self.adj[v].iter().collect();
                for w in nbrs {
                    g.adj[w].remove(v);
                }
            }
        }
        g
    }

    /// True iff every vertex has equal degree into every class not containing
    /// it. This is the necessary degree condition for a K_r-decomposition;
    /// it forces `e(G)` to be divisible by `r*(r-1)/2`.
    pub fn is_kr_divisible(&self) -> bool {
        let verts: Vec<usize> = (0..self.vertex_count()).collect();
        par::par_all(&verts, |&v| {
            let cv = self.class_of(v);
            let mut base = None;
            for j in 0..self.r {
                if j == cv {
                    continue;
                }
                let d = self.degree_into(v, j);
                match base {
                    None => base = Some(d),
                    Some(b) if b != d => return false,
                    _ => {}
                }
            }
            true
        })
    }

    /// First witness of a divisibility defect, if any: `(v, j1, j2)` with
    /// unequal degrees into classes `j1`, `j2`.
    pub fn divisibility_defect(&self) -> Option<(usize, usize, usize)> {
        for v in 0..self.vertex_count() {
            let cv = self.class_of(v);
            let classes: Vec<usize> = (0..self.r).filter(|&j| j != cv).collect();
            for w in classes.windows(2) {
                if self.degree_into(v, w[0]) != self.degree_into(v, w[1]) {
                    return Some((v, w[0], w[1]));
                }
            }
        }
        None
    }

    /// Partite minimum degree: min over classes `j` and vertices `v` outside
    /// class `j` of `d(v, V_j)`.
    pub fn hat_delta(&self) -> usize {
        let mut min = usize::MAX;
        for v in 0..self.vertex_count() {
            for j in 0..self.r {
                if j != self.class_of(v) {
                    min = min.min(self.degree_into(v, j));
                }
            }
        }
        if min == usize::MAX {
            0
        } else {
            min
        }
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let table = (0..self.vertex_count())
            .map(|v| (0..self.r).map(|j| self.degree_into(v, j)).collect())
            .collect();
        DegreeProfile { table }
    }

    /// All transversal K_r subgraphs (one vertex per class), each listed once
    /// as a sorted vertex vector, in lexicographic order.
    pub fn enumerate_r_cliques(&self) -> Vec<Vec<usize>> {
        let firsts: Vec<usize> = self.class_range(0).collect();
        let mut cliques = par::par_flat_map(&firsts, |&v0| {
            let mut out = Vec::new();
            let mut stack = vec![v0];
            self.extend_clique(&mut stack, 1, &mut out);
            out
        });
        cliques.sort();
        cliques
    }

    fn extend_clique(&self, stack: &mut Vec<usize>, next_class: usize, out: &mut Vec<Vec<usize>>) {
        if next_class == self.r {
            out.push(stack.clone());
            return;
        }
        let cands = self.common_neighbors_in_class(stack, next_class);
        for w in cands.iter() {
            stack.push(w);
            self.extend_clique(stack, next_class + 1, out);
            stack.pop();
        }
    }

    /// Candidate transversal cliques through the edge `(u, v)`.
    pub fn cliques_through_edge(&self, u: usize, v: usize) -> Vec<Vec<usize>> {
        debug_assert!(self.has_edge(u, v));
        let (cu, cv) = (self.class_of(u), self.class_of(v));
        let mut out = Vec::new();
        let mut stack = vec![u, v];
        let rest: Vec<usize> = (0..self.r).filter(|&j| j != cu && j != cv).collect();
        self.extend_clique_classes(&mut stack, &rest, 0, &mut out);
        out
    }

    fn extend_clique_classes(
        &self,
        stack: &mut Vec<usize>,
        classes: &[usize],
        idx: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if idx == classes.len() {
            let mut c = stack.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let cands = self.common_neighbors_in_class(stack, classes[idx]);
        for w in cands.iter() {
            stack.push(w);
            self.extend_clique_classes(stack, classes, idx + 1, out);
            stack.pop();
        }
    }

    /// Graph holding exactly the edges of the given transversal clique.
    pub fn of_clique(r: usize, n: usize, clique: &[usize]) -> MultipartiteGraph {
        let mut g = MultipartiteGraph::empty(r, n);
        for (i, &u) in clique.iter().enumerate() {
            for &v in &clique[i + 1..] {
                g.insert_edge(u, v);
            }
        }
        g
    }

    /// Graph holding the union of the given cliques' edges. Panics if the
    /// cliques are not pairwise edge-disjoint.
    pub fn of_cliques(r: usize, n: usize, cliques: &[Vec<usize>]) -> MultipartiteGraph {
        let mut g = MultipartiteGraph::empty(r, n);
        for c in cliques {
            for (i, &u) in c.iter().enumerate() {
                for &v in &c[i + 1..] {
                    assert!(!g.has_edge(u, v), "cliques overlap on edge ({u},{v})");
                    g.insert_edge(u, v);
                }
            }
        }
        g
    }
}

/// Per-(vertex, class) degree table. `table[v][class_of(v)]` is always 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub table: Vec<Vec<usize>>,
}

impl DegreeProfile {
    /// Largest cross-degree imbalance `|d(v,V_a) - d(v,V_b)|` over all
    /// vertices and foreign class pairs.
    pub fn max_imbalance(&self) -> usize {
        self.table
            .iter()
            .enumerate()
            .map(|(v, row)| {
                let r = row.len();
                let cv = v / (self.table.len() / r);
                let ds: Vec<usize> = (0..r).filter(|&j| j != cv).map(|j| row[j]).collect();
                match (ds.iter().max(), ds.iter().min()) {
                    (Some(mx), Some(mn)) => mx - mn,
                    _ => 0,
                }
            })
            .max()
            .unwrap_or(0)
    }
}

/// An exact partition of a host's edge set into transversal r-cliques.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueDecomposition {
    pub cliques: Vec<Vec<usize>>,
}

impl CliqueDecomposition {
    pub fn new(mut cliques: Vec<Vec<usize>>) -> Self {
        for c in &mut cliques {
            c.sort_unstable();
        }
        cliques.sort();
        CliqueDecomposition { cliques }
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// Concatenates two certificates (no overlap check; verify afterwards).
    pub fn merged(mut self, other: CliqueDecomposition) -> CliqueDecomposition {
        self.cliques.extend(other.cliques);
        CliqueDecomposition::new(self.cliques)
    }
}

/// Detailed verification failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionDefect {
    #[error("clique {0:?} has wrong size (expected {1})")]
    WrongSize(Vec<usize>, usize),
    #[error("clique {0:?} is not transversal (one vertex per class)")]
    NotTransversal(Vec<usize>),
    #[error("clique {0:?} uses edge ({1},{2}) absent from the host")]
    MissingEdge(Vec<usize>, usize, usize),
    #[error("edge ({0},{1}) is covered more than once")]
    Overlap(usize, usize),
    #[error("edge ({0},{1}) of the host is uncovered")]
    Uncovered(usize, usize),
}

/// Checks that `d` is a genuine K_r-decomposition of `g`: every clique is a
/// transversal complete subgraph, cliques are pairwise edge-disjoint, and
/// their union is exactly `E(g)`.
pub fn check_decomposition(
    g: &MultipartiteGraph,
    d: &CliqueDecomposition,
) -> Result<(), DecompositionDefect> {
    let r = g.class_count();
    let mut covered = MultipartiteGraph::empty(r, g.class_size());
    for c in &d.cliques {
        if c.len() != r {
            return Err(DecompositionDefect::WrongSize(c.clone(), r));
        }
        let mut seen = vec![false; r];
        for &v in c {
            let j = g.class_of(v);
            if seen[j] {
                return Err(DecompositionDefect::NotTransversal(c.clone()));
            }
            seen[j] = true;
        }
        for (i, &u) in c.iter().enumerate() {
            for &v in &c[i + 1..] {
                if !g.has_edge(u, v) {
                    return Err(DecompositionDefect::MissingEdge(c.clone(), u, v));
                }
                if covered.has_edge(u, v) {
                    return Err(DecompositionDefect::Overlap(u.min(v), u.max(v)));
                }
                covered.insert_edge(u, v);
            }
        }
    }
    if let Some(&(u, v)) = g
        .edges()
        .iter()
        .find(|&&(u, v)| !covered.has_edge(u, v))
    {
        return Err(DecompositionDefect::Uncovered(u, v));
    }
    Ok(())
}

/// Boolean form of [`check_decomposition`].
pub fn verify_decomposition(g: &MultipartiteGraph, d: &CliqueDecomposition) -> bool {
    check_decomposition(g, d).is_ok()
}

/// Checks that `d` partitions exactly the edges of `cover` (a subgraph of
/// some host), i.e. `d` decomposes `cover` as a standalone graph.
pub fn verify_covers_exactly(cover: &MultipartiteGraph, d: &CliqueDecomposition) -> bool {
    verify_decomposition(cover, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divisibility_on_complete_and_damaged() {
        // complete tripartite K_{2,2,2}: all cross-degrees equal n
        let g = MultipartiteGraph::complete(3, 2);
        assert!(g.is_kr_divisible());
        // removing one edge breaks it at both endpoints
        let mut h = g.clone();
        h.delete_edge(0, 2);
        assert!(!h.is_kr_divisible());
        assert!(h.divisibility_defect().is_some());
    }

    #[test]
    fn hat_delta_values() {
        assert_eq!(MultipartiteGraph::complete(3, 3).hat_delta(), 3);
        assert_eq!(MultipartiteGraph::empty(3, 2).hat_delta(), 0);
    }

    #[test]
    fn clique_enumeration_counts() {
        // complete balanced host has n^r transversal cliques
        for (r, n) in [(3, 2), (3, 3), (4, 2)] {
            let g = MultipartiteGraph::complete(r, n);
            assert_eq!(g.enumerate_r_cliques().len(), n.pow(r as u32));
        }
        // single K_3 on classes of size 1
        let g = MultipartiteGraph::complete(3, 1);
        assert_eq!(g.enumerate_r_cliques(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn verify_catches_defects() {
        let g = MultipartiteGraph::complete(3, 3);
        let cliques = g.enumerate_r_cliques();
        // a full Latin-square style decomposition of K_{3,3,3}
        let mut chosen = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                chosen.push(vec![a, 3 + b, 6 + (a + b) % 3]);
            }
        }
        let d = CliqueDecomposition::new(chosen);
        assert!(verify_decomposition(&g, &d));
        // dropping a clique leaves edges uncovered
        let mut fewer = d.clone();
        fewer.cliques.pop();
        assert!(!verify_decomposition(&g, &fewer));
        // repeating a clique overlaps
        let mut more = d.clone();
        more.cliques.push(more.cliques[0].clone());
        assert!(!verify_decomposition(&g, &more));
        assert!(cliques.contains(&d.cliques[0]));
    }

    #[test]
    fn intra_class_edge_rejected() {
        let err = MultipartiteGraph::from_edges(3, 2, [(0, 1)]).unwrap_err();
        assert!(matches!(err, GraphError::IntraClassEdge(0, 1, 0)));
    }

    #[test]
    fn hat_delta_invariant_under_class_preserving_relabel() {
        let g = MultipartiteGraph::from_edges(3, 3, [(0, 3), (0, 6), (1, 4), (3, 6), (1, 7)])
            .unwrap();
        // relabel within classes: swap vertices 0<->1, 3<->4, 6<->7
        let swap = |v: usize| match v {
            0 => 1,
            1 => 0,
            3 => 4,
            4 => 3,
            6 => 7,
            7 => 6,
            x => x,
        };
        let h = MultipartiteGraph::from_edges(
            3,
            3,
            g.edges().into_iter().map(|(u, v)| (swap(u), swap(v))),
        )
        .unwrap();
        assert_eq!(g.hat_delta(), h.hat_delta());
    }
}
