//! Labelled template graphs, rooted degeneracy, and greedy edge-disjoint
//! embedding with a maximum-degree cap.
//!
//! A template vertex carries one of three labels: a fixed host vertex (a
//! root), a partition slice `U^i_j`, or a whole class `V_j`. An embedding
//! maps every vertex into its label set, injectively per template, using
//! only host edges unused by earlier embeddings, and keeps the union's
//! maximum degree below a cap. Candidates are drawn uniformly at random
//! (seeded) and each template is retried with fresh randomness before
//! giving up, standing in for the probabilistic existence arguments.
//!
//! The same engine serves both the partite mode (labels resolved through a
//! partition) and the plain mode where the host is an arbitrary graph and
//! free vertices may land anywhere.

use crate::bitset::BitSet;
use crate::graph::MultipartiteGraph;
use crate::partitions::KPartition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    /// A fixed host vertex (the label `{v}`).
    Root(usize),
    /// A partition slice `U^i_j` (cell, class).
    Cell(usize, usize),
    /// A whole class `V_j`; in plain-host mode `Class(0)` means any vertex.
    Class(usize),
}

impl Label {
    pub fn is_root(&self) -> bool {
        matches!(self, Label::Root(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("root vertices {0} and {1} are adjacent")]
    AdjacentRoots(usize, usize),
    #[error("host vertex {0} appears as a root label more than once")]
    DuplicateRoot(usize),
    #[error("edge ({0},{1}) out of range")]
    EdgeOutOfRange(usize, usize),
}

/// A labelled template graph.
#[derive(Clone, Debug)]
pub struct LabelledGraph {
    pub labels: Vec<Label>,
    pub edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl LabelledGraph {
    pub fn new(labels: Vec<Label>, edges: Vec<(usize, usize)>) -> Result<Self, TemplateError> {
        let n = labels.len();
        let mut adj = vec![Vec::new(); n];
        let mut roots_seen = std::collections::BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            if let Label::Root(v) = l {
                if roots_seen.insert(*v, i).is_some() {
                    return Err(TemplateError::DuplicateRoot(*v));
                }
            }
        }
        for &(u, v) in &edges {
            if u >= n || v >= n || u == v {
                return Err(TemplateError::EdgeOutOfRange(u, v));
            }
            if labels[u].is_root() && labels[v].is_root() {
                return Err(TemplateError::AdjacentRoots(u, v));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(LabelledGraph { labels, edges, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| self.labels[v].is_root())
            .collect()
    }

    /// Rooted degeneracy: the least `d` admitting an ordering that starts
    /// with the roots and gives every later vertex at most `d` earlier
    /// neighbours. Returns `(d, witness ordering)`.
    pub fn degeneracy(&self) -> (usize, Vec<usize>) {
        let n = self.vertex_count();
        let mut alive: Vec<bool> = vec![true; n];
        let mut deg: Vec<usize> = (0..n).map(|v| self.degree(v)).collect();
        let free: Vec<usize> = (0..n).filter(|&v| !self.labels[v].is_root()).collect();
        let mut suffix = Vec::with_capacity(free.len());
        let mut d = 0;
        for _ in 0..free.len() {
            // peel the free vertex with the fewest remaining neighbours
            let v = free
                .iter()
                .copied()
                .filter(|&v| alive[v])
                .min_by_key(|&v| (deg[v], v))
                .unwrap();
            d = d.max(deg[v]);
            alive[v] = false;
            for &w in &self.adj[v] {
                if alive[w] {
                    deg[w] -= 1;
                }
            }
            suffix.push(v);
        }
        suffix.reverse();
        let mut order = self.roots();
        order.extend(suffix);
        debug_assert!(self.check_ordering(&order) <= d);
        (d, order)
    }

    /// Back-degree of the worst vertex under the given ordering.
    pub fn check_ordering(&self, order: &[usize]) -> usize {
        let pos: std::collections::BTreeMap<usize, usize> =
            order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut worst = 0;
        for (i, &v) in order.iter().enumerate() {
            if self.labels[v].is_root() {
                continue;
            }
            let back = self.adj[v].iter().filter(|&&w| pos[&w] < i).count();
            worst = worst.max(back);
        }
        worst
    }
}

/// Anything templates can be embedded into.
pub trait EmbedHost {
    fn vertex_count(&self) -> usize;
    fn adjacency(&self, v: usize) -> &BitSet;
    /// Host vertices a template vertex with this label may map to.
    fn members(&self, label: &Label) -> BitSet;
}

/// An r-partite host with an optional cell structure.
pub struct PartitionedHost<'a> {
    pub graph: &'a MultipartiteGraph,
    pub partition: Option<&'a KPartition>,
}

impl EmbedHost for PartitionedHost<'_> {
    fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    fn adjacency(&self, v: usize) -> &BitSet {
        self.graph.neighbors(v)
    }

    fn members(&self, label: &Label) -> BitSet {
        let mut out = BitSet::new(self.vertex_count());
        match label {
            Label::Root(v) => out.insert(*v),
            Label::Class(j) => out.insert_range(self.graph.class_range(*j)),
            Label::Cell(i, j) => {
                if let Some(p) = self.partition {
                    for v in p.slice(self.graph, *i, *j) {
                        out.insert(v);
                    }
                }
            }
        }
        out
    }
}

/// A plain undirected host graph (single-class mode: every free label is
/// `Class(0)`).
pub struct SimpleGraph {
    adj: Vec<BitSet>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![BitSet::new(n); n];
        for (u, v) in edges {
            adj[u].insert(v);
            adj[v].insert(u);
        }
        SimpleGraph { adj }
    }
}

impl EmbedHost for SimpleGraph {
    fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    fn adjacency(&self, v: usize) -> &BitSet {
        &self.adj[v]
    }

    fn members(&self, label: &Label) -> BitSet {
        let mut out = BitSet::new(self.vertex_count());
        match label {
            Label::Root(v) => out.insert(*v),
            Label::Class(_) => out.insert_range(0..self.vertex_count()),
            Label::Cell(_, _) => {}
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct EmbedConfig {
    pub seed: u64,
    /// Fresh-randomness restarts per template before giving up.
    pub retries: usize,
    /// Absolute cap on the union's maximum degree.
    pub degree_cap: usize,
    /// Host vertices free template vertices must avoid.
    pub forbidden: Vec<usize>,
}

impl EmbedConfig {
    pub fn new(seed: u64, degree_cap: usize) -> Self {
        EmbedConfig {
            seed,
            retries: 40,
            degree_cap,
            forbidden: Vec::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("template {template}, vertex {vertex}: empty candidate set after {attempts} attempts")]
pub struct EmbedStuck {
    pub template: usize,
    pub vertex: usize,
    pub attempts: usize,
}

/// One placed template: `map[i]` is the host vertex of template vertex `i`.
#[derive(Clone, Debug)]
pub struct Embedded {
    pub template: usize,
    pub map: Vec<usize>,
}

impl Embedded {
    pub fn edge_images(&self, t: &LabelledGraph) -> Vec<(usize, usize)> {
        t.edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (self.map[u], self.map[v]);
                (a.min(b), a.max(b))
            })
            .collect()
    }
}

/// Tracks edges and degrees consumed by successive embeddings; can be
/// seeded with pre-used edges so separate embedding phases stay disjoint.
pub struct EmbedState {
    used: Vec<BitSet>,
    used_deg: Vec<usize>,
}

impl EmbedState {
    pub fn new(host_vertices: usize) -> Self {
        EmbedState {
            used: vec![BitSet::new(host_vertices); host_vertices],
            used_deg: vec![0; host_vertices],
        }
    }

    pub fn mark_edge(&mut self, u: usize, v: usize) {
        if !self.used[u].contains(v) {
            self.used[u].insert(v);
            self.used[v].insert(u);
            self.used_deg[u] += 1;
            self.used_deg[v] += 1;
        }
    }

    pub fn is_used(&self, u: usize, v: usize) -> bool {
        self.used[u].contains(v)
    }

    pub fn max_degree(&self) -> usize {
        self.used_deg.iter().copied().max().unwrap_or(0)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.used_deg[v]
    }
}

/// Embeds every template edge-disjointly, vertices into their labels, the
/// union respecting the degree cap. Templates are processed in order,
/// vertices in degeneracy order, candidates drawn uniformly at random.
pub fn embed_all<H: EmbedHost>(
    host: &H,
    templates: &[LabelledGraph],
    cfg: &EmbedConfig,
) -> Result<Vec<Embedded>, EmbedStuck> {
    let mut state = EmbedState::new(host.vertex_count());
    embed_all_with_state(host, templates, cfg, &mut state)
}

/// [`embed_all`] against shared external state.
pub fn embed_all_with_state<H: EmbedHost>(
    host: &H,
    templates: &[LabelledGraph],
    cfg: &EmbedConfig,
    state: &mut EmbedState,
) -> Result<Vec<Embedded>, EmbedStuck> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut forbidden = BitSet::new(host.vertex_count());
    for &v in &cfg.forbidden {
        forbidden.insert(v);
    }
    let mut out = Vec::with_capacity(templates.len());
    for (ti, t) in templates.iter().enumerate() {
        let (_, order) = t.degeneracy();
        let mut placed = None;
        let mut stuck_vertex = 0;
        for _ in 0..cfg.retries.max(1) {
            match try_place(host, t, &order, cfg.degree_cap, &forbidden, state, &mut rng) {
                Ok(map) => {
                    placed = Some(map);
                    break;
                }
                Err(v) => stuck_vertex = v,
            }
        }
        let Some(map) = placed else {
            return Err(EmbedStuck {
                template: ti,
                vertex: stuck_vertex,
                attempts: cfg.retries,
            });
        };
        for &(u, v) in &t.edges {
            state.mark_edge(map[u], map[v]);
        }
        out.push(Embedded { template: ti, map });
    }
    Ok(out)
}

fn try_place<H: EmbedHost>(
    host: &H,
    t: &LabelledGraph,
    order: &[usize],
    cap: usize,
    forbidden: &BitSet,
    state: &EmbedState,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, usize> {
    let n = t.vertex_count();
    let mut map = vec![usize::MAX; n];
    let mut used_here = BitSet::new(host.vertex_count());
    for &v in order {
        let mut cands = host.members(&t.labels[v]);
        if !t.labels[v].is_root() {
            cands.subtract(forbidden);
        }
        // injectivity within the template
        cands.subtract(&used_here);
        if t.labels[v].is_root() {
            // roots are forced; only re-add the single vertex
            cands = host.members(&t.labels[v]);
        }
        // adjacency and edge-disjointness against already placed neighbours
        for &w in t.neighbors(v) {
            if map[w] != usize::MAX {
                cands.and_with(host.adjacency(map[w]));
                cands.subtract(&state.used[map[w]]);
            }
        }
        // degree-cap reservation for this vertex's full template degree
        let tdeg = t.degree(v);
        let viable: Vec<usize> = cands
            .iter()
            .filter(|&c| state.used_deg[c] + tdeg <= cap)
            .collect();
        if viable.is_empty() {
            return Err(v);
        }
        let pick = viable[rng.random_range(0..viable.len())];
        map[v] = pick;
        used_here.insert(pick);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_cells() -> LabelledGraph {
        LabelledGraph::new(
            vec![Label::Cell(0, 0), Label::Cell(0, 1), Label::Cell(0, 2)],
            vec![(0, 1), (1, 2), (0, 2)],
        )
        .unwrap()
    }

    #[test]
    fn degeneracy_of_clique_and_star() {
        // K_r with no roots has degeneracy r-1
        for r in [3, 4, 5] {
            let labels = vec![Label::Class(0); r];
            let mut edges = Vec::new();
            for i in 0..r {
                for j in i + 1..r {
                    edges.push((i, j));
                }
            }
            let t = LabelledGraph::new(labels, edges).unwrap();
            assert_eq!(t.degeneracy().0, r - 1);
        }
        // star with rooted centre has degeneracy 1
        let star = LabelledGraph::new(
            vec![Label::Root(0), Label::Class(1), Label::Class(1), Label::Class(1)],
            vec![(0, 1), (0, 2), (0, 3)],
        )
        .unwrap();
        assert_eq!(star.degeneracy().0, 1);
    }

    #[test]
    fn ordering_witness_is_valid() {
        let t = triangle_cells();
        let (d, order) = t.degeneracy();
        assert_eq!(d, 2);
        assert!(t.check_ordering(&order) <= d);
    }

    #[test]
    fn empty_template_list() {
        let g = MultipartiteGraph::complete(3, 4);
        let host = PartitionedHost { graph: &g, partition: None };
        let out = embed_all(&host, &[], &EmbedConfig::new(0, 100)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn triangle_into_complete_host() {
        let g = MultipartiteGraph::complete(3, 4);
        let p = KPartition::trivial(&g);
        let host = PartitionedHost { graph: &g, partition: Some(&p) };
        let out = embed_all(&host, &[triangle_cells()], &EmbedConfig::new(1, 100)).unwrap();
        let map = &out[0].map;
        for j in 0..3 {
            assert_eq!(g.class_of(map[j]), j, "vertex must land in its label");
        }
        assert!(g.has_edge(map[0], map[1]) && g.has_edge(map[1], map[2]));
    }

    #[test]
    fn embeddings_are_edge_disjoint() {
        let g = MultipartiteGraph::complete(3, 4);
        let host = PartitionedHost { graph: &g, partition: None };
        let t = LabelledGraph::new(
            vec![Label::Class(0), Label::Class(1), Label::Class(2)],
            vec![(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        let templates: Vec<LabelledGraph> = (0..8).map(|_| t.clone()).collect();
        let out = embed_all(&host, &templates, &EmbedConfig::new(5, 100)).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for e in &out {
            for img in e.edge_images(&t) {
                assert!(seen.insert(img), "edge {img:?} reused");
            }
        }
    }

    #[test]
    fn cap_saturation_sticks() {
        // copies of a single edge rooted at vertex 0 exhaust its budget
        let g = MultipartiteGraph::complete(2, 5);
        let host = PartitionedHost { graph: &g, partition: None };
        let t = LabelledGraph::new(
            vec![Label::Root(0), Label::Class(1)],
            vec![(0, 1)],
        )
        .unwrap();
        let templates: Vec<LabelledGraph> = (0..4).map(|_| t.clone()).collect();
        let cfg = EmbedConfig { degree_cap: 3, ..EmbedConfig::new(2, 3) };
        match embed_all(&host, &templates, &cfg) {
            Err(stuck) => assert_eq!(stuck.template, 3),
            Ok(_) => panic!("fourth copy must exceed the cap at the root"),
        }
    }

    #[test]
    fn plain_host_paths() {
        // route a 2-path through a plain graph, middle vertex anywhere
        let h = SimpleGraph::new(5, [(0, 2), (2, 4), (0, 3), (3, 4)]);
        let t = LabelledGraph::new(
            vec![Label::Root(0), Label::Class(0), Label::Root(4)],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        let out = embed_all(&h, &[t.clone(), t.clone()], &EmbedConfig::new(3, 10)).unwrap();
        // the two paths must use disjoint middles (edge-disjointness forces it)
        assert_ne!(out[0].map[1], out[1].map[1]);
    }

    #[test]
    fn forbidden_vertices_avoided() {
        let g = MultipartiteGraph::complete(3, 3);
        let host = PartitionedHost { graph: &g, partition: None };
        let t = LabelledGraph::new(
            vec![Label::Class(0), Label::Class(1)],
            vec![(0, 1)],
        )
        .unwrap();
        let mut cfg = EmbedConfig::new(4, 100);
        cfg.forbidden = vec![0, 1, 3, 4];
        let out = embed_all(&host, &[t], &cfg).unwrap();
        assert_eq!(out[0].map[0], 2);
        assert_eq!(out[0].map[1], 5);
    }
}
