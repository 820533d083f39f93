//! Transformers, clique expansions, bank graphs and absorbers, all built
//! over abstract vertices with explicit certifying decompositions.
//!
//! An absorber for a divisible graph H is a graph A such that both A and
//! A ∪ H decompose into transversal cliques. The route goes through
//! transformers: T is an (H, H')-transformer when T ∪ H and T ∪ H' both
//! decompose, so divisibility-preserving surgery can walk H over to a graph
//! that trivially decomposes (a disjoint union of cliques). Every claim in
//! this module is certified: constructors return the clique lists, and the
//! tests re-verify them against materialized hosts.
//!
//! Construction is abstract-first: templates live on fresh vertices where
//! the required clique matchings always exist, and a separate step embeds
//! them into a concrete host. This separates the combinatorial identity
//! (always checkable) from the host embedding (which may fail at small
//! sizes and then says so).

use crate::cover::{perfect_clique_matching, MatchingOutcome};
use crate::embedding::{
    embed_all_with_state, EmbedConfig, EmbedHost, EmbedState, EmbedStuck, Label, LabelledGraph,
};
use crate::graph::{CliqueDecomposition, MultipartiteGraph};
use std::collections::BTreeMap;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Abstract r-partite graphs
// ---------------------------------------------------------------------------

/// An r-partite graph over its own growable vertex universe. Vertex ids are
/// arena indices; each vertex carries a class. Templates and their
/// certificates are built here, then materialized or embedded.
#[derive(Clone, Debug, Default)]
pub struct RGraph {
    pub r: usize,
    class_of: Vec<usize>,
    edges: std::collections::BTreeSet<(usize, usize)>,
}

impl RGraph {
    pub fn new(r: usize) -> Self {
        RGraph {
            r,
            class_of: Vec::new(),
            edges: Default::default(),
        }
    }

    pub fn add_vertex(&mut self, class: usize) -> usize {
        assert!(class < self.r);
        self.class_of.push(class);
        self.class_of.len() - 1
    }

    pub fn class_of(&self, v: usize) -> usize {
        self.class_of[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.class_of.len()
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert_ne!(
            self.class_of[u], self.class_of[v],
            "intra-class edge ({u},{v})"
        );
        assert!(
            self.edges.insert((u.min(v), u.max(v))),
            "duplicate edge ({u},{v})"
        );
    }

    pub fn add_clique(&mut self, verts: &[usize]) {
        for (i, &u) in verts.iter().enumerate() {
            for &v in &verts[i + 1..] {
                self.add_edge(u, v);
            }
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn degree_into(&self, v: usize, class: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| {
                (a == v && self.class_of[b] == class) || (b == v && self.class_of[a] == class)
            })
            .count()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_divisible(&self) -> bool {
        (0..self.vertex_count()).all(|v| {
            let cv = self.class_of[v];
            let ds: Vec<usize> = (0..self.r)
                .filter(|&j| j != cv)
                .map(|j| self.degree_into(v, j))
                .collect();
            ds.windows(2).all(|w| w[0] == w[1])
        })
    }

    /// Vertices touched by at least one edge.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Materializes as a balanced host: class size = largest class count
    /// (padded with isolated vertices). Returns the host plus the arena ->
    /// host vertex map.
    pub fn materialize(&self) -> (MultipartiteGraph, Vec<usize>) {
        let mut per_class = vec![0usize; self.r];
        let mut map = vec![usize::MAX; self.vertex_count()];
        for (v, &c) in self.class_of.iter().enumerate() {
            map[v] = per_class[c];
            per_class[c] += 1;
        }
        let n = per_class.iter().copied().max().unwrap_or(0).max(1);
        for (v, &c) in self.class_of.iter().enumerate() {
            map[v] += c * n;
        }
        let mut g = MultipartiteGraph::empty(self.r, n);
        for &(u, v) in &self.edges {
            g.insert_edge(map[u], map[v]);
        }
        (g, map)
    }
}

/// Remaps arena clique lists through a vertex map.
pub fn map_cliques(cliques: &[Vec<usize>], map: &[usize]) -> Vec<Vec<usize>> {
    cliques
        .iter()
        .map(|c| {
            let mut k: Vec<usize> = c.iter().map(|&v| map[v]).collect();
            k.sort_unstable();
            k
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Clique expansion and the bank graph M_h
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error("edge ({0},{1}) not present")]
    EdgeAbsent(usize, usize),
    #[error("graph is not K_r-divisible")]
    NotDivisible,
    #[error("map is not an identification homomorphism: {0}")]
    NotIdentification(String),
    #[error("s = {s} too small: vertex {x} needs s >= {needed}")]
    STooSmall { s: usize, x: usize, needed: usize },
    #[error("no second matching exists at s = {s} for vertex {x}")]
    MatchingUnavailable { s: usize, x: usize },
    #[error("target too large to enumerate divisible subgraphs ({edges} edges > cap {cap})")]
    EnumerationTooLarge { edges: usize, cap: usize },
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedStuck),
}

/// Expands the single edge `(x, y)` inside `g`: the edge is replaced by a
/// fresh clique missing its (class(x), class(y)) edge, re-attached through
/// two pendant edges. Returns the new graph and the fresh clique vertices
/// indexed by class.
pub fn kr_expand(g: &RGraph, x: usize, y: usize) -> Result<(RGraph, Vec<usize>), GadgetError> {
    if !g.has_edge(x, y) {
        return Err(GadgetError::EdgeAbsent(x, y));
    }
    let mut out = g.clone();
    out.edges.remove(&(x.min(y), x.max(y)));
    let fresh: Vec<usize> = (0..g.r).map(|j| out.add_vertex(j)).collect();
    let (jx, jy) = (g.class_of(x), g.class_of(y));
    for a in 0..g.r {
        for b in a + 1..g.r {
            if (a, b) != (jx.min(jy), jx.max(jy)) {
                out.add_edge(fresh[a], fresh[b]);
            }
        }
    }
    out.add_edge(x, fresh[jy]);
    out.add_edge(y, fresh[jx]);
    Ok((out, fresh))
}

/// Undoes a single expansion by identifying `x` with the fresh vertex of
/// its own class; the result is the original graph with a pendant clique
/// attached at `x` (used to sanity-check the expansion).
pub fn identify(g: &RGraph, keep: usize, merge: usize) -> Result<RGraph, GadgetError> {
    if g.class_of(keep) != g.class_of(merge) {
        return Err(GadgetError::NotIdentification(format!(
            "{keep} and {merge} lie in different classes"
        )));
    }
    let nk = g.neighbors(keep);
    for w in g.neighbors(merge) {
        if nk.contains(&w) {
            return Err(GadgetError::NotIdentification(format!(
                "{keep} and {merge} share neighbour {w}"
            )));
        }
    }
    let mut out = g.clone();
    let merged: Vec<(usize, usize)> = out
        .edges
        .iter()
        .copied()
        .filter(|&(a, b)| a == merge || b == merge)
        .collect();
    for (a, b) in merged {
        out.edges.remove(&(a, b));
        let other = if a == merge { b } else { a };
        out.edges.insert((keep.min(other), keep.max(other)));
    }
    Ok(out)
}

/// The expansion of a whole graph: every edge expanded with its own fresh
/// clique, over a standalone fresh copy of the vertex set. Returns the
/// expansion, the copy map `V(g) -> V(exp)`, and per-edge fresh cliques.
pub fn expand_all(g: &RGraph) -> (RGraph, Vec<usize>, BTreeMap<(usize, usize), Vec<usize>>) {
    let mut exp = RGraph::new(g.r);
    let base: Vec<usize> = (0..g.vertex_count())
        .map(|v| exp.add_vertex(g.class_of(v)))
        .collect();
    let mut gadgets = BTreeMap::new();
    for (x, y) in g.edges() {
        let fresh: Vec<usize> = (0..g.r).map(|j| exp.add_vertex(j)).collect();
        let (jx, jy) = (g.class_of(x), g.class_of(y));
        for a in 0..g.r {
            for b in a + 1..g.r {
                if (a, b) != (jx.min(jy), jx.max(jy)) {
                    exp.add_edge(fresh[a], fresh[b]);
                }
            }
        }
        exp.add_edge(base[x], fresh[jy]);
        exp.add_edge(base[y], fresh[jx]);
        gadgets.insert((x, y), fresh);
    }
    (exp, base, gadgets)
}

/// The bank graph: the expansion of the h-fold complete multigraph on one
/// vertex per class. `|M_h| = r + h r C(r,2)`, divisible, degeneracy r-1.
pub struct BankGraph {
    pub graph: RGraph,
    pub base: Vec<usize>,
    /// Fresh clique for multi-edge copy `t` of pair `(a, b)`.
    pub gadgets: BTreeMap<(usize, usize, usize), Vec<usize>>,
}

pub fn build_m_h(r: usize, h: usize) -> BankGraph {
    let mut g = RGraph::new(r);
    let base: Vec<usize> = (0..r).map(|j| g.add_vertex(j)).collect();
    let mut gadgets = BTreeMap::new();
    for a in 0..r {
        for b in a + 1..r {
            for t in 0..h {
                let fresh: Vec<usize> = (0..r).map(|j| g.add_vertex(j)).collect();
                for c in 0..r {
                    for d in c + 1..r {
                        if (c, d) != (a, b) {
                            g.add_edge(fresh[c], fresh[d]);
                        }
                    }
                }
                g.add_edge(base[a], fresh[b]);
                g.add_edge(base[b], fresh[a]);
                gadgets.insert((a, b, t), fresh);
            }
        }
    }
    BankGraph { graph: g, base, gadgets }
}

// ---------------------------------------------------------------------------
// Transformers
// ---------------------------------------------------------------------------

/// The full transformer template: parts, edge groups, matchings and the
/// four block certificates that assemble into decompositions of T ∪ H and
/// T ∪ H'.
pub struct Transformer {
    /// The shared arena holding H, H' and all transformer vertices.
    pub arena: RGraph,
    /// Transformer edges only (excluding H and H').
    pub t_edges: Vec<(usize, usize)>,
    pub e_h: Vec<(usize, usize)>,
    pub e_hp: Vec<(usize, usize)>,
    pub e_z: Vec<(usize, usize)>,
    pub e_s: Vec<(usize, usize)>,
    pub e_sp: Vec<(usize, usize)>,
    pub f_edges: Vec<(usize, usize)>,
    /// `Z^{xy}` per H-edge.
    pub z_sets: BTreeMap<(usize, usize), Vec<usize>>,
    /// `S^x` per H-vertex.
    pub s_sets: BTreeMap<usize, Vec<usize>>,
    pub f1: BTreeMap<usize, Vec<Vec<usize>>>,
    pub f2: BTreeMap<usize, Vec<Vec<usize>>>,
    /// Decomposition of T ∪ H.
    pub cert_with_h: Vec<Vec<usize>>,
    /// Decomposition of T ∪ H'.
    pub cert_with_hp: Vec<Vec<usize>>,
    /// Vertex count |T| (H and H' included, per the size formula).
    pub size: usize,
}

/// Builds an (H, H')-transformer inside `arena`. `h_verts`/`hp_verts` list
/// the vertex sets; the graphs must be vertex-disjoint, K_r-divisible, and
/// `phi` (H vertex -> H' vertex) must be an edge-bijective class-preserving
/// homomorphism, i.e. H' is obtained from H by identifying vertices.
///
/// `s` controls the side sets: each H-vertex receives (r-1)s fresh
/// companions carrying the two clique matchings. The first matching is
/// positional and always exists once `s >= (r-2) * z`; the second is found
/// by exact search avoiding the first.
pub fn build_transformer(
    arena: &mut RGraph,
    h_verts: &[usize],
    h_edges: &[(usize, usize)],
    phi: &BTreeMap<usize, usize>,
    s: usize,
) -> Result<Transformer, GadgetError> {
    let r = arena.r;
    check_identification(arena, h_verts, h_edges, phi)?;

    let mut e_h = Vec::new();
    let mut e_hp = Vec::new();
    let mut e_z = Vec::new();
    let mut e_s = Vec::new();
    let mut e_sp = Vec::new();
    let mut f_edges = Vec::new();
    let mut z_sets: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut s_sets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut f1: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    let mut f2: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();

    // Z^{xy}: r-2 fresh vertices per H-edge, connected as a clique (E_Z),
    // joined to both endpoints (E_H) and their images (E_H')
    for &(x, y) in h_edges {
        let (jx, jy) = (arena.class_of(x), arena.class_of(y));
        let zs: Vec<usize> = (0..r)
            .filter(|&j| j != jx && j != jy)
            .map(|j| arena.add_vertex(j))
            .collect();
        for (i, &a) in zs.iter().enumerate() {
            for &b in &zs[i + 1..] {
                arena.add_edge(a, b);
                e_z.push((a.min(b), a.max(b)));
            }
        }
        for &z in &zs {
            arena.add_edge(x, z);
            e_h.push((x.min(z), x.max(z)));
            arena.add_edge(y, z);
            e_h.push((y.min(z), y.max(z)));
            let (px, py) = (phi[&x], phi[&y]);
            arena.add_edge(px, z);
            e_hp.push((px.min(z), px.max(z)));
            arena.add_edge(py, z);
            e_hp.push((py.min(z), py.max(z)));
        }
        z_sets.insert((x, y), zs);
    }

    // S^x: s fresh vertices in each class other than x's, with star edges
    // from x (E_S) and phi(x) (E_S'), plus the matchings F^x_1 and F^x_2
    for &x in h_verts {
        let jx = arena.class_of(x);
        let classes: Vec<usize> = (0..r).filter(|&j| j != jx).collect();
        // Z^x grouped by class
        let mut z_by_class: BTreeMap<usize, Vec<usize>> =
            classes.iter().map(|&c| (c, Vec::new())).collect();
        for (&(a, b), zs) in &z_sets {
            if a == x || b == x {
                for &z in zs {
                    z_by_class.get_mut(&arena.class_of(z)).unwrap().push(z);
                }
            }
        }
        let z = z_by_class.values().map(|v| v.len()).max().unwrap_or(0);
        debug_assert!(
            z_by_class.values().all(|v| v.len() == z),
            "divisibility makes Z^x class-balanced"
        );
        if s < (r - 2) * z {
            return Err(GadgetError::STooSmall { s, x, needed: (r - 2) * z });
        }
        let mut s_by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut s_all = Vec::new();
        for &c in &classes {
            let verts: Vec<usize> = (0..s).map(|_| arena.add_vertex(c)).collect();
            for &v in &verts {
                arena.add_edge(x, v);
                e_s.push((x.min(v), x.max(v)));
                let px = phi[&x];
                arena.add_edge(px, v);
                e_sp.push((px.min(v), px.max(v)));
            }
            s_all.extend(&verts);
            s_by_class.insert(c, verts);
        }
        s_sets.insert(x, s_all);

        // F^x_1: positional scheme. The clique of Z-vertex (class c, index
        // t) takes S-position rho * z + t in every other class, where rho
        // enumerates the classes around c; leftover S-positions form
        // aligned cliques.
        let mut m1: Vec<Vec<usize>> = Vec::new();
        let cls_index: BTreeMap<usize, usize> =
            classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        for &c in &classes {
            for (t, &zv) in z_by_class[&c].iter().enumerate() {
                let mut clique = vec![zv];
                for &c2 in &classes {
                    if c2 == c {
                        continue;
                    }
                    let rho = (cls_index[&c2] + (r - 1) - cls_index[&c] - 1) % (r - 1);
                    clique.push(s_by_class[&c2][rho * z + t]);
                }
                m1.push(clique);
            }
        }
        for p in (r - 2) * z..s {
            m1.push(classes.iter().map(|&c| s_by_class[&c][p]).collect());
        }
        // F^x_2: exact search on the complete (r-1)-partite side sets minus
        // the S-S pairs already used by F^x_1
        let mut scratch = MultipartiteGraph::empty(r.max(2), s.max(1));
        let spos: BTreeMap<usize, (usize, usize)> = s_by_class
            .iter()
            .flat_map(|(&c, verts)| {
                verts
                    .iter()
                    .enumerate()
                    .map(move |(i, &v)| (v, (c, i)))
            })
            .collect();
        let to_scratch = |v: usize| -> usize {
            let (c, i) = spos[&v];
            c * s.max(1) + i
        };
        for &c1 in &classes {
            for &c2 in &classes {
                if c1 >= c2 {
                    continue;
                }
                for &a in &s_by_class[&c1] {
                    for &b in &s_by_class[&c2] {
                        scratch.try_insert_edge(to_scratch(a), to_scratch(b)).unwrap();
                    }
                }
            }
        }
        for clique in &m1 {
            for (i, &a) in clique.iter().enumerate() {
                for &b in &clique[i + 1..] {
                    if spos.contains_key(&a) && spos.contains_key(&b) {
                        scratch.delete_edge(to_scratch(a), to_scratch(b));
                    }
                }
            }
        }
        let sets: Vec<Vec<usize>> = classes
            .iter()
            .map(|&c| s_by_class[&c].iter().map(|&v| to_scratch(v)).collect())
            .collect();
        let m2_scratch = match perfect_clique_matching(&scratch, &sets, r - 1, None, 4_000_000) {
            MatchingOutcome::Found(rep) => rep.cliques,
            _ => return Err(GadgetError::MatchingUnavailable { s, x }),
        };
        let from_scratch: BTreeMap<usize, usize> =
            spos.iter().map(|(&v, _)| (to_scratch(v), v)).collect();
        let m2: Vec<Vec<usize>> = m2_scratch
            .iter()
            .map(|c| c.iter().map(|&v| from_scratch[&v]).collect())
            .collect();
        // commit matching edges to the arena
        for m in [&m1, &m2] {
            for clique in m {
                for (i, &a) in clique.iter().enumerate() {
                    for &b in &clique[i + 1..] {
                        if !arena.has_edge(a, b) {
                            arena.add_edge(a, b);
                        }
                        f_edges.push((a.min(b), a.max(b)));
                    }
                }
            }
        }
        f1.insert(x, m1);
        f2.insert(x, m2);
    }

    // audits: Z^x independent in F^x_1 (one Z-vertex per clique) and
    // F^x_1, F^x_2 edge-disjoint
    for &x in h_verts {
        let zx: Vec<usize> = z_sets
            .iter()
            .filter(|(&(a, b), _)| a == x || b == x)
            .flat_map(|(_, zs)| zs.iter().copied())
            .collect();
        for c in &f1[&x] {
            assert!(
                c.iter().filter(|v| zx.contains(v)).count() <= 1,
                "Z^x not independent in F^x_1"
            );
        }
        let f1_pairs: std::collections::BTreeSet<(usize, usize)> = f1[&x]
            .iter()
            .flat_map(|c| clique_pairs(c))
            .collect();
        for c in &f2[&x] {
            for p in clique_pairs(c) {
                assert!(!f1_pairs.contains(&p), "F^x_1 and F^x_2 overlap");
            }
        }
    }
    // internal T_1 vertices have degree exactly r+1 in T_1
    {
        let t1: std::collections::BTreeSet<(usize, usize)> =
            e_h.iter().chain(&e_hp).chain(&e_z).copied().collect();
        for zs in z_sets.values() {
            for &zv in zs {
                let d = t1
                    .iter()
                    .filter(|&&(a, b)| a == zv || b == zv)
                    .count();
                assert_eq!(d, r + 1, "internal T_1 degree must be r+1");
            }
        }
    }

    // certificates
    let mut cert_with_h = Vec::new();
    let mut cert_with_hp = Vec::new();
    // H ∪ E_H ∪ E_Z and H' ∪ E_H' ∪ E_Z split into {x,y} ∪ Z^{xy} blocks
    for &(x, y) in h_edges {
        let zs = &z_sets[&(x, y)];
        let mut c1 = vec![x, y];
        c1.extend(zs);
        cert_with_h.push(c1);
        let mut c2 = vec![phi[&x], phi[&y]];
        c2.extend(zs);
        cert_with_hp.push(c2);
    }
    // T_2 ∪ E_H' uses (phi(x), F^x_1) and (x, F^x_2) blocks; T_2 ∪ E_H the
    // mirrored blocks
    for &x in h_verts {
        for c in &f1[&x] {
            let mut k = vec![phi[&x]];
            k.extend(c);
            cert_with_h.push(k);
            let mut k2 = vec![x];
            k2.extend(c);
            cert_with_hp.push(k2);
        }
        for c in &f2[&x] {
            let mut k = vec![x];
            k.extend(c);
            cert_with_h.push(k);
            let mut k2 = vec![phi[&x]];
            k2.extend(c);
            cert_with_hp.push(k2);
        }
    }

    let t_edges: Vec<(usize, usize)> = e_h
        .iter()
        .chain(&e_hp)
        .chain(&e_z)
        .chain(&e_s)
        .chain(&e_sp)
        .chain(&f_edges)
        .copied()
        .collect();
    {
        // the edge groups must be pairwise disjoint and exhaust E(T)
        let set: std::collections::BTreeSet<(usize, usize)> = t_edges.iter().copied().collect();
        assert_eq!(set.len(), t_edges.len(), "transformer edge groups overlap");
    }
    let hp_vert_count = {
        let mut vs: Vec<usize> = phi.values().copied().collect();
        vs.sort_unstable();
        vs.dedup();
        vs.len()
    };
    let size = h_verts.len()
        + hp_vert_count
        + (r - 2) * h_edges.len()
        + (r - 1) * s * h_verts.len();
    Ok(Transformer {
        arena: arena.clone(),
        t_edges,
        e_h,
        e_hp,
        e_z,
        e_s,
        e_sp,
        f_edges,
        z_sets,
        s_sets,
        f1,
        f2,
        cert_with_h,
        cert_with_hp,
        size,
    })
}

fn clique_pairs(c: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, &a) in c.iter().enumerate() {
        for &b in &c[i + 1..] {
            out.push((a.min(b), a.max(b)));
        }
    }
    out
}

fn check_identification(
    arena: &RGraph,
    h_verts: &[usize],
    h_edges: &[(usize, usize)],
    phi: &BTreeMap<usize, usize>,
) -> Result<(), GadgetError> {
    let mut images = std::collections::BTreeSet::new();
    for &(x, y) in h_edges {
        if !h_verts.contains(&x) || !h_verts.contains(&y) {
            return Err(GadgetError::NotIdentification(format!(
                "edge ({x},{y}) leaves the H vertex set"
            )));
        }
        let (px, py) = (phi[&x], phi[&y]);
        if arena.class_of(px) != arena.class_of(x) || arena.class_of(py) != arena.class_of(y) {
            return Err(GadgetError::NotIdentification(
                "phi does not preserve classes".into(),
            ));
        }
        if !arena.has_edge(px, py) {
            return Err(GadgetError::NotIdentification(format!(
                "image edge ({px},{py}) missing"
            )));
        }
        if !images.insert((px.min(py), px.max(py))) {
            return Err(GadgetError::NotIdentification(format!(
                "two H-edges map to the image edge ({px},{py})"
            )));
        }
        if h_verts.contains(&px) || h_verts.contains(&py) {
            return Err(GadgetError::NotIdentification(
                "H and H' are not vertex-disjoint".into(),
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Absorbers
// ---------------------------------------------------------------------------

/// An absorber for a target graph H: certificates decompose both A and
/// A ∪ H. All vertex ids refer to `arena`.
pub struct Absorber {
    pub arena: RGraph,
    /// Absorber edges (disjoint from the target's edges).
    pub a_edges: Vec<(usize, usize)>,
    pub cert_alone: Vec<Vec<usize>>,
    pub cert_with_target: Vec<Vec<usize>>,
    /// Vertex count of A (audit against s^3 recorded, not enforced).
    pub size: usize,
    pub size_within_s_cubed: bool,
    pub s_used: usize,
}

/// Builds the two 6.4-style transformers that move `subject` (a divisible
/// graph in `arena`) to a fresh copy of the bank graph `bank`, and returns
/// the combined transformer edge set plus certificates for
/// (T ∪ subject) and (T ∪ bank).
struct BankTransformer {
    t_edges: Vec<(usize, usize)>,
    cert_with_subject: Vec<Vec<usize>>,
    cert_with_bank: Vec<Vec<usize>>,
}

fn transformer_to_bank(
    arena: &mut RGraph,
    subject_verts: &[usize],
    subject_edges: &[(usize, usize)],
    bank: &BankInstance,
    s: usize,
) -> Result<BankTransformer, GadgetError> {
    let r = arena.r;
    // attach a pendant clique at the smaller endpoint of every edge
    let mut att_edges: Vec<(usize, usize)> = subject_edges.to_vec();
    let mut pend_cliques = Vec::new();
    let mut pendant_of: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for &(x, y) in subject_edges {
        let anchor = x.min(y);
        let ja = arena.class_of(anchor);
        let mut clique = vec![anchor];
        let mut by_class: Vec<usize> = vec![usize::MAX; r];
        by_class[ja] = anchor;
        for j in 0..r {
            if j != ja {
                let v = arena.add_vertex(j);
                clique.push(v);
                by_class[j] = v;
            }
        }
        for (i, &a) in clique.iter().enumerate() {
            for &b in &clique[i + 1..] {
                arena.add_edge(a, b);
                att_edges.push((a.min(b), a.max(b)));
            }
        }
        pend_cliques.push(clique.clone());
        pendant_of.insert((x, y), by_class);
    }
    // the expansion, over fresh vertices
    let mut exp_base: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in subject_verts {
        let nv = arena.add_vertex(arena.class_of(v));
        exp_base.insert(v, nv);
    }
    let mut exp_edges: Vec<(usize, usize)> = Vec::new();
    let mut exp_verts: Vec<usize> = exp_base.values().copied().collect();
    let mut exp_gadget: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for &(x, y) in subject_edges {
        let fresh: Vec<usize> = (0..r).map(|j| arena.add_vertex(j)).collect();
        exp_verts.extend(&fresh);
        let (jx, jy) = (arena.class_of(x), arena.class_of(y));
        for a in 0..r {
            for b in a + 1..r {
                if (a, b) != (jx.min(jy), jx.max(jy)) {
                    arena.add_edge(fresh[a], fresh[b]);
                    exp_edges.push((fresh[a].min(fresh[b]), fresh[a].max(fresh[b])));
                }
            }
        }
        arena.add_edge(exp_base[&x], fresh[jy]);
        exp_edges.push(ordered(exp_base[&x], fresh[jy]));
        arena.add_edge(exp_base[&y], fresh[jx]);
        exp_edges.push(ordered(exp_base[&y], fresh[jx]));
        exp_gadget.insert((x, y), fresh);
    }
    exp_verts.sort_unstable();

    // phi_att: expansion -> attached graph
    let mut phi_att: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in subject_verts {
        phi_att.insert(exp_base[&v], v);
    }
    for (&(x, y), fresh) in &exp_gadget {
        let anchor = x.min(y);
        let pend = &pendant_of[&(x, y)];
        for (j, &u) in fresh.iter().enumerate() {
            if j == arena.class_of(anchor) {
                phi_att.insert(u, anchor);
            } else {
                phi_att.insert(u, pend[j]);
            }
        }
    }
    // phi_bank: expansion -> bank copy; subject edges between a fixed class
    // pair enumerate the bank's parallel gadgets
    let mut phi_bank: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in subject_verts {
        phi_bank.insert(exp_base[&v], bank.base[arena.class_of(v)]);
    }
    let mut pair_counter: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&(x, y), fresh) in &exp_gadget {
        let (a, b) = (
            arena.class_of(x).min(arena.class_of(y)),
            arena.class_of(x).max(arena.class_of(y)),
        );
        let t = *pair_counter
            .entry((a, b))
            .and_modify(|t| *t += 1)
            .or_insert(0);
        let bg = &bank.gadgets[&(a, b, t)];
        for (j, &u) in fresh.iter().enumerate() {
            phi_bank.insert(u, bg[j]);
        }
    }

    let t1 = build_transformer(arena, &exp_verts, &exp_edges, &phi_att, s)?;
    let t2 = build_transformer(arena, &exp_verts, &exp_edges, &phi_bank, s)?;

    let mut t_edges = t1.t_edges.clone();
    t_edges.extend(&t2.t_edges);
    t_edges.extend(&exp_edges);
    for &(x, y) in subject_edges {
        let anchor = x.min(y);
        for pair in clique_pairs(&pend_cliques[subject_edges.iter().position(|e| *e == (x, y)).unwrap()]) {
            let _ = anchor;
            t_edges.push(pair);
        }
    }
    // T ∪ subject = (T1 ∪ attached) ⊎ (T2 ∪ expansion)
    let mut cert_with_subject = t1.cert_with_hp.clone();
    cert_with_subject.extend(t2.cert_with_h.clone());
    // T ∪ bank = (T1 ∪ expansion) ⊎ (T2 ∪ bank) ⊎ pendant cliques
    let mut cert_with_bank = t1.cert_with_h.clone();
    cert_with_bank.extend(t2.cert_with_hp.clone());
    cert_with_bank.extend(pend_cliques);
    Ok(BankTransformer {
        t_edges,
        cert_with_subject,
        cert_with_bank,
    })
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct BankInstance {
    base: Vec<usize>,
    gadgets: BTreeMap<(usize, usize, usize), Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

fn instantiate_bank(arena: &mut RGraph, r: usize, h: usize) -> BankInstance {
    let template = build_m_h(r, h);
    let offset = arena.vertex_count();
    for v in 0..template.graph.vertex_count() {
        arena.add_vertex(template.graph.class_of(v));
    }
    let mut edges = Vec::new();
    for (u, v) in template.graph.edges() {
        arena.add_edge(u + offset, v + offset);
        edges.push((u + offset, v + offset));
    }
    BankInstance {
        base: template.base.iter().map(|&v| v + offset).collect(),
        gadgets: template
            .gadgets
            .iter()
            .map(|(&k, g)| (k, g.iter().map(|&v| v + offset).collect()))
            .collect(),
        edges,
    }
}

/// Side-set sizing for absorber construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SidePolicy {
    /// Use exactly this size; fail if the matchings do not exist.
    Exact(usize),
    /// Smallest size at which all matchings exist.
    MinimalFeasible,
    /// Minimal feasible, then grown until the `|A| <= s^3` audit passes.
    AuditGrow,
}

/// Builds an absorber for the divisible graph given by
/// (`target_verts`, `target_edges`) inside `arena`.
pub fn build_absorber(
    arena: &mut RGraph,
    target_verts: &[usize],
    target_edges: &[(usize, usize)],
    s: Option<usize>,
) -> Result<Absorber, GadgetError> {
    let policy = match s {
        Some(v) => SidePolicy::Exact(v),
        None => SidePolicy::AuditGrow,
    };
    build_absorber_with_policy(arena, target_verts, target_edges, policy)
}

/// [`build_absorber`] with an explicit side-set policy.
pub fn build_absorber_with_policy(
    arena: &mut RGraph,
    target_verts: &[usize],
    target_edges: &[(usize, usize)],
    policy: SidePolicy,
) -> Result<Absorber, GadgetError> {
    let r = arena.r;
    {
        let mut probe = RGraph::new(r);
        let map: BTreeMap<usize, usize> = target_verts
            .iter()
            .map(|&v| (v, probe.add_vertex(arena.class_of(v))))
            .collect();
        for &(x, y) in target_edges {
            probe.add_edge(map[&x], map[&y]);
        }
        if !probe.is_divisible() {
            return Err(GadgetError::NotDivisible);
        }
    }
    if target_edges.is_empty() {
        return Ok(Absorber {
            arena: arena.clone(),
            a_edges: Vec::new(),
            cert_alone: Vec::new(),
            cert_with_target: Vec::new(),
            size: 0,
            size_within_s_cubed: true,
            s_used: match policy {
                SidePolicy::Exact(v) => v,
                _ => 1,
            },
        });
    }
    let clique_edges = r * (r - 1) / 2;
    assert_eq!(target_edges.len() % clique_edges, 0);
    let h = target_edges.len() / clique_edges;

    let feasibility_floor = 1.max(
        target_verts
            .iter()
            .map(|&v| {
                let d: usize = target_edges
                    .iter()
                    .filter(|&&(a, b)| a == v || b == v)
                    .count();
                (r - 2) * (d * (r - 2)).div_ceil(r - 1)
            })
            .max()
            .unwrap_or(1),
    );
    let mut try_s = match policy {
        SidePolicy::Exact(v) => v,
        _ => feasibility_floor,
    };
    let adaptive = policy != SidePolicy::Exact(try_s) || !matches!(policy, SidePolicy::Exact(_));
    loop {
        let mut scratch = arena.clone();
        match build_absorber_at(&mut scratch, target_verts, target_edges, h, try_s) {
            Ok(mut a) => {
                a.s_used = try_s;
                a.size_within_s_cubed = a.size <= try_s * try_s * try_s;
                if policy == SidePolicy::AuditGrow && !a.size_within_s_cubed {
                    try_s += ((a.size as f64).cbrt().ceil() as usize).saturating_sub(try_s).max(1);
                    continue;
                }
                *arena = scratch;
                return Ok(a);
            }
            Err(GadgetError::STooSmall { needed, .. }) if adaptive => {
                try_s = needed.max(try_s + 1);
            }
            Err(GadgetError::MatchingUnavailable { .. }) if adaptive => {
                try_s += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn build_absorber_at(
    arena: &mut RGraph,
    target_verts: &[usize],
    target_edges: &[(usize, usize)],
    h: usize,
    s: usize,
) -> Result<Absorber, GadgetError> {
    let r = arena.r;
    let bank = instantiate_bank(arena, r, h);
    // h disjoint fresh cliques
    let mut q_cliques = Vec::new();
    let mut q_edges = Vec::new();
    let mut q_verts = Vec::new();
    for _ in 0..h {
        let c: Vec<usize> = (0..r).map(|j| arena.add_vertex(j)).collect();
        for (i, &a) in c.iter().enumerate() {
            for &b in &c[i + 1..] {
                arena.add_edge(a, b);
                q_edges.push(ordered(a, b));
            }
        }
        q_verts.extend(&c);
        q_cliques.push(c);
    }
    let t_subject = transformer_to_bank(arena, target_verts, target_edges, &bank, s)?;
    let t_q = transformer_to_bank(arena, &q_verts, &q_edges, &bank, s)?;

    let mut a_edges = t_subject.t_edges.clone();
    a_edges.extend(&t_q.t_edges);
    a_edges.extend(&bank.edges);
    a_edges.extend(&q_edges);

    // A alone = (T_subject ∪ bank) ⊎ (T_q ∪ q-cliques)
    let mut cert_alone = t_subject.cert_with_bank.clone();
    cert_alone.extend(t_q.cert_with_subject.clone());
    // A ∪ H = (T_subject ∪ H) ⊎ (T_q ∪ bank) ⊎ q-cliques
    let mut cert_with_target = t_subject.cert_with_subject.clone();
    cert_with_target.extend(t_q.cert_with_bank.clone());
    cert_with_target.extend(q_cliques.clone());

    let verts_in: std::collections::BTreeSet<usize> =
        a_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let size = verts_in.len();
    Ok(Absorber {
        arena: arena.clone(),
        a_edges,
        cert_alone,
        cert_with_target,
        size,
        size_within_s_cubed: false,
        s_used: s,
    })
}

// ---------------------------------------------------------------------------
// Absorbing sets over a host
// ---------------------------------------------------------------------------

/// An absorber embedded into a host graph.
pub struct EmbeddedAbsorber {
    /// The host subgraph this absorber can swallow.
    pub target_edges: Vec<(usize, usize)>,
    pub edges: Vec<(usize, usize)>,
    pub cert_alone: CliqueDecomposition,
    pub cert_with_target: CliqueDecomposition,
}

pub struct AbsorbingSet {
    pub absorbers: Vec<EmbeddedAbsorber>,
}

impl AbsorbingSet {
    pub fn union_edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .absorbers
            .iter()
            .flat_map(|a| a.edges.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Finds an unused absorber whose target is exactly `edges`.
    pub fn lookup(&self, edges: &[(usize, usize)], used: &[bool]) -> Option<usize> {
        let mut key: Vec<(usize, usize)> = edges.to_vec();
        key.sort_unstable();
        self.absorbers.iter().enumerate().position(|(i, a)| {
            if used[i] {
                return false;
            }
            let mut t = a.target_edges.clone();
            t.sort_unstable();
            t == key
        })
    }
}

#[derive(Clone, Debug)]
pub struct AbsorbingSetConfig {
    pub seed: u64,
    /// Cap on the degree the union of absorbers may add at any host vertex.
    pub degree_cap: usize,
    /// Vertices busier than this are avoided by later absorbers.
    pub busy_threshold: usize,
    /// Side-set policy passed to every absorber build.
    pub s: SidePolicy,
    /// Refuse to enumerate divisible subgraphs of targets with more edges.
    pub max_enumeration_edges: usize,
    pub retries: usize,
    /// Host vertices the absorber bodies must avoid (roots are exempt).
    pub forbidden: Vec<usize>,
}

/// Enumerates the divisible subgraphs of a target's edge set.
pub fn divisible_subgraphs(
    g: &MultipartiteGraph,
    edges: &[(usize, usize)],
) -> Vec<Vec<(usize, usize)>> {
    let m = edges.len();
    let mut out = Vec::new();
    for mask in 0u64..(1 << m) {
        let sub: Vec<(usize, usize)> = (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| edges[i])
            .collect();
        let mut probe = RGraph::new(g.class_count());
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        for &(u, v) in &sub {
            for w in [u, v] {
                ids.entry(w).or_insert_with(|| probe.add_vertex(g.class_of(w)));
            }
        }
        for &(u, v) in &sub {
            probe.add_edge(ids[&u], ids[&v]);
        }
        if probe.is_divisible() {
            out.push(sub);
        }
    }
    out
}

/// Builds one embedded absorber per divisible subgraph of every target,
/// edge-disjointly inside `host` (restricted by `allowed` when given),
/// avoiding busy vertices, with the union's extra degree capped.
pub fn build_absorbing_set(
    host: &MultipartiteGraph,
    targets: &[Vec<(usize, usize)>],
    cfg: &AbsorbingSetConfig,
) -> Result<AbsorbingSet, GadgetError> {
    let mut subs = Vec::new();
    for t in targets {
        if t.len() > cfg.max_enumeration_edges {
            return Err(GadgetError::EnumerationTooLarge {
                edges: t.len(),
                cap: cfg.max_enumeration_edges,
            });
        }
        subs.extend(divisible_subgraphs(host, t));
    }
    build_absorbing_set_for_targets(host, &subs, cfg)
}

/// Like [`build_absorbing_set`] but absorbs exactly the given subgraph
/// list, one absorber each (no subgraph enumeration).
pub fn build_absorbing_set_for_targets(
    host: &MultipartiteGraph,
    targets: &[Vec<(usize, usize)>],
    cfg: &AbsorbingSetConfig,
) -> Result<AbsorbingSet, GadgetError> {
    let mut state = EmbedState::new(host.vertex_count());
    let mut absorbers = Vec::new();
    for (ti, target) in targets.iter().enumerate() {
        let emb = embed_absorber_into(host, target, cfg, ti as u64, &mut state)?;
        absorbers.push(emb);
    }
    Ok(AbsorbingSet { absorbers })
}

/// Builds the abstract absorber for a concrete host subgraph and embeds it:
/// target vertices become roots, fresh vertices carry class labels.
pub fn embed_absorber_into(
    host: &MultipartiteGraph,
    target: &[(usize, usize)],
    cfg: &AbsorbingSetConfig,
    salt: u64,
    state: &mut EmbedState,
) -> Result<EmbeddedAbsorber, GadgetError> {
    let r = host.class_count();
    let mut arena = RGraph::new(r);
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    for &(u, v) in target {
        for w in [u, v] {
            ids.entry(w).or_insert_with(|| arena.add_vertex(host.class_of(w)));
        }
    }
    let tverts: Vec<usize> = ids.values().copied().collect();
    let tedges: Vec<(usize, usize)> = target
        .iter()
        .map(|&(u, v)| ordered(ids[&u], ids[&v]))
        .collect();
    for &(a, b) in &tedges {
        arena.add_edge(a, b);
    }
    let absorber = build_absorber_with_policy(&mut arena, &tverts, &tedges, cfg.s)?;
    if absorber.a_edges.is_empty() {
        return Ok(EmbeddedAbsorber {
            target_edges: target.to_vec(),
            edges: Vec::new(),
            cert_alone: CliqueDecomposition::new(Vec::new()),
            cert_with_target: CliqueDecomposition::new(Vec::new()),
        });
    }
    // template: roots for target vertices, class labels elsewhere
    let back: BTreeMap<usize, usize> = ids.iter().map(|(&h, &a)| (a, h)).collect();
    let averts: Vec<usize> = {
        let mut vs: Vec<usize> = absorber
            .a_edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        vs.extend(tverts.iter().copied());
        vs.sort_unstable();
        vs.dedup();
        vs
    };
    let tindex: BTreeMap<usize, usize> =
        averts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let labels: Vec<Label> = averts
        .iter()
        .map(|&v| match back.get(&v) {
            Some(&hv) => Label::Root(hv),
            None => Label::Class(arena.class_of(v)),
        })
        .collect();
    let tmpl_edges: Vec<(usize, usize)> = absorber
        .a_edges
        .iter()
        .map(|&(a, b)| (tindex[&a], tindex[&b]))
        .collect();
    let template = LabelledGraph::new(labels, tmpl_edges).map_err(|e| {
        GadgetError::NotIdentification(format!("absorber template malformed: {e}"))
    })?;
    let mut busy: Vec<usize> = (0..host.vertex_count())
        .filter(|&v| state.degree(v) >= cfg.busy_threshold && !back.values().any(|&h| h == v))
        .collect();
    busy.extend(cfg.forbidden.iter().copied().filter(|v| !back.values().any(|h| h == v)));
    let embed_cfg = EmbedConfig {
        seed: cfg.seed.wrapping_add(salt.wrapping_mul(0x9e37)),
        retries: cfg.retries,
        degree_cap: cfg.degree_cap,
        forbidden: busy,
    };
    let placed = embed_all_with_state(
        &MaskedHost { host },
        &[template],
        &embed_cfg,
        state,
    )?;
    let map = &placed[0].map;
    let edges: Vec<(usize, usize)> = absorber
        .a_edges
        .iter()
        .map(|&(a, b)| ordered(map[tindex[&a]], map[tindex[&b]]))
        .collect();
    let to_host = |cliques: &[Vec<usize>]| -> CliqueDecomposition {
        CliqueDecomposition::new(
            cliques
                .iter()
                .map(|c| c.iter().map(|&v| map[tindex[&v]]).collect())
                .collect(),
        )
    };
    Ok(EmbeddedAbsorber {
        target_edges: target.to_vec(),
        edges,
        cert_alone: to_host(&absorber.cert_alone),
        cert_with_target: to_host(&absorber.cert_with_target),
    })
}

struct MaskedHost<'a> {
    host: &'a MultipartiteGraph,
}

impl EmbedHost for MaskedHost<'_> {
    fn vertex_count(&self) -> usize {
        self.host.vertex_count()
    }

    fn adjacency(&self, v: usize) -> &crate::bitset::BitSet {
        self.host.neighbors(v)
    }

    fn members(&self, label: &Label) -> crate::bitset::BitSet {
        let mut out = crate::bitset::BitSet::new(self.host.vertex_count());
        match label {
            Label::Root(v) => out.insert(*v),
            Label::Class(j) => out.insert_range(self.host.class_range(*j)),
            Label::Cell(_, _) => {}
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::verify_decomposition;

    fn arena_with_clique(r: usize) -> (RGraph, Vec<usize>, Vec<(usize, usize)>) {
        let mut a = RGraph::new(r);
        let verts: Vec<usize> = (0..r).map(|j| a.add_vertex(j)).collect();
        a.add_clique(&verts);
        let edges: Vec<(usize, usize)> = a.edges().collect();
        (a, verts, edges)
    }

    #[test]
    fn expand_single_edge_shape() {
        // r=3: expanding one edge yields 5 vertices; endpoints keep degree
        // 1, fresh vertices have degree 2
        let mut g = RGraph::new(3);
        let x = g.add_vertex(0);
        let y = g.add_vertex(1);
        g.add_edge(x, y);
        let (exp, fresh) = kr_expand(&g, x, y).unwrap();
        assert_eq!(exp.vertex_count(), 5);
        assert_eq!(exp.degree(x), 1);
        assert_eq!(exp.degree(y), 1);
        for &f in &fresh {
            assert_eq!(exp.degree(f), 2);
        }
        // identifying x with its fresh classmate restores the edge plus a
        // pendant clique
        let back = identify(&exp, x, fresh[0]).unwrap();
        assert!(back.has_edge(x, y));
        assert_eq!(back.edge_count(), 4); // xy restored + pendant triangle at x
    }

    #[test]
    fn expand_all_of_k3() {
        let (g, _, _) = arena_with_clique(3);
        let (exp, _, _) = expand_all(&g);
        assert_eq!(exp.vertex_count(), 3 + 3 * 3);
        assert!(exp.is_divisible());
    }

    #[test]
    fn bank_graph_shape() {
        for (r, h, want) in [(3, 1, 12), (3, 2, 21), (4, 1, 28)] {
            let bank = build_m_h(r, h);
            assert_eq!(bank.graph.vertex_count(), want, "|M_h| = r + h r C(r,2)");
            assert!(bank.graph.is_divisible());
        }
    }

    #[test]
    fn bank_graph_degeneracy() {
        let bank = build_m_h(3, 2);
        let labels = vec![Label::Class(0); bank.graph.vertex_count()];
        let edges: Vec<(usize, usize)> = bank.graph.edges().collect();
        let t = LabelledGraph::new(labels, edges).unwrap();
        let (d, order) = t.degeneracy();
        assert_eq!(d, 2);
        assert!(t.check_ordering(&order) <= 2);
    }

    #[test]
    fn transformer_identity_on_triangles() {
        // H = H' = K_3 with the identity correspondence; s = 2 gives
        // |T| = 9 + 6s = 21
        let mut arena = RGraph::new(3);
        let h: Vec<usize> = (0..3).map(|j| arena.add_vertex(j)).collect();
        arena.add_clique(&h);
        let hp: Vec<usize> = (0..3).map(|j| arena.add_vertex(j)).collect();
        arena.add_clique(&hp);
        let h_edges: Vec<(usize, usize)> = clique_pairs(&h);
        let phi: BTreeMap<usize, usize> = h.iter().copied().zip(hp.iter().copied()).collect();
        let t = build_transformer(&mut arena, &h, &h_edges, &phi, 2).unwrap();
        assert_eq!(t.size, 21);
        // both certificates verify on materialized hosts
        let (host, map) = t.arena.materialize();
        let mut t_union_h = MultipartiteGraph::empty(3, host.class_size());
        for &(a, b) in t.t_edges.iter().chain(&h_edges) {
            t_union_h.insert_edge(map[a], map[b]);
        }
        let cert = CliqueDecomposition::new(map_cliques(&t.cert_with_h, &map));
        assert!(verify_decomposition(&t_union_h, &cert));
        let hp_edges = clique_pairs(&hp);
        let mut t_union_hp = MultipartiteGraph::empty(3, host.class_size());
        for &(a, b) in t.t_edges.iter().chain(&hp_edges) {
            t_union_hp.insert_edge(map[a], map[b]);
        }
        let cert2 = CliqueDecomposition::new(map_cliques(&t.cert_with_hp, &map));
        assert!(verify_decomposition(&t_union_hp, &cert2));
    }

    #[test]
    fn transformer_rejects_non_identification() {
        let mut arena = RGraph::new(3);
        let h: Vec<usize> = (0..3).map(|j| arena.add_vertex(j)).collect();
        arena.add_clique(&h);
        // image misses an edge
        let hp: Vec<usize> = (0..3).map(|j| arena.add_vertex(j)).collect();
        arena.add_edge(hp[0], hp[1]);
        let phi: BTreeMap<usize, usize> = h.iter().copied().zip(hp.iter().copied()).collect();
        let h_edges = clique_pairs(&h);
        assert!(matches!(
            build_transformer(&mut arena, &h, &h_edges, &phi, 2),
            Err(GadgetError::NotIdentification(_))
        ));
    }

    #[test]
    fn absorber_for_triangle_verifies() {
        let mut arena = RGraph::new(3);
        let h: Vec<usize> = (0..3).map(|j| arena.add_vertex(j)).collect();
        arena.add_clique(&h);
        let h_edges = clique_pairs(&h);
        let a = build_absorber(&mut arena, &h, &h_edges, Some(2)).unwrap();
        let (host, map) = a.arena.materialize();
        let mut alone = MultipartiteGraph::empty(3, host.class_size());
        for &(x, y) in &a.a_edges {
            alone.insert_edge(map[x], map[y]);
        }
        assert!(verify_decomposition(
            &alone,
            &CliqueDecomposition::new(map_cliques(&a.cert_alone, &map))
        ));
        let mut with = alone.clone();
        for &(x, y) in &h_edges {
            with.insert_edge(map[x], map[y]);
        }
        assert!(verify_decomposition(
            &with,
            &CliqueDecomposition::new(map_cliques(&a.cert_with_target, &map))
        ));
    }

    #[test]
    fn absorber_for_empty_target_is_empty() {
        let mut arena = RGraph::new(3);
        let v = arena.add_vertex(0);
        let a = build_absorber(&mut arena, &[v], &[], None).unwrap();
        assert!(a.a_edges.is_empty());
        assert!(a.size_within_s_cubed);
    }

    #[test]
    fn default_s_meets_size_audit() {
        let mut arena = RGraph::new(3);
        let h: Vec<usize> = (0..3).map(|j| arena.add_vertex(j)).collect();
        arena.add_clique(&h);
        let h_edges = clique_pairs(&h);
        let a = build_absorber(&mut arena, &h, &h_edges, None).unwrap();
        assert!(a.size_within_s_cubed, "|A| = {} vs s = {}", a.size, a.s_used);
    }

    #[test]
    fn absorbing_set_on_complete_host() {
        // absorber templates run to a few hundred vertices even for a
        // triangle target, so the host must be large enough to hold them
        let n = 160;
        let host = MultipartiteGraph::complete(3, n);
        // one small divisible target: a transversal triangle
        let target = vec![vec![(0, n), (0, 2 * n), (n, 2 * n)]];
        let cfg = AbsorbingSetConfig {
            seed: 3,
            degree_cap: n - 1,
            busy_threshold: n / 2,
            s: SidePolicy::Exact(2),
            max_enumeration_edges: 16,
            retries: 20,
            forbidden: Vec::new(),
        };
        let set = build_absorbing_set(&host, &target, &cfg).unwrap();
        // subgraph enumeration: empty graph + the triangle itself
        assert_eq!(set.absorbers.len(), 2);
        for a in &set.absorbers {
            let mut alone = MultipartiteGraph::empty(3, 160);
            for &(u, v) in &a.edges {
                assert!(host.has_edge(u, v));
                alone.insert_edge(u, v);
            }
            assert!(verify_decomposition(&alone, &a.cert_alone));
            let mut with = alone.clone();
            for &(u, v) in &a.target_edges {
                with.insert_edge(u, v);
            }
            assert!(verify_decomposition(&with, &a.cert_with_target));
        }
        // absorbers pairwise edge-disjoint
        let union = set.union_edges();
        let mut dedup = union.clone();
        dedup.dedup();
        assert_eq!(union, dedup);
    }
}
