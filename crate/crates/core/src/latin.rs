//! Mutually orthogonal Latin squares as clique decompositions.
//!
//! A sequence of r-2 mutually orthogonal n x n Latin squares corresponds to
//! a K_r-decomposition of the complete balanced r-partite graph whose
//! classes are the r-2 symbol alphabets, the rows and the columns: each
//! cell becomes the clique on its row, its column and its symbols. Partial
//! squares give edge-disjoint clique fragments, each containing a
//! row-column edge; completion extends every fragment to a full transversal
//! clique and decomposes the complement.
//!
//! Class layout for order-n instances with `r = layers + 2`: classes
//! `0..r-2` hold the symbol vertices of each layer, class `r-2` the rows,
//! class `r-1` the columns.

use crate::exact::{exact_decompose, DecomposeOutcome, InfeasibilityCertificate};
use crate::graph::{verify_decomposition, CliqueDecomposition, MultipartiteGraph};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One or more partial Latin squares drawn in the same grid. Symbols are
/// `1..=n`; `None` is an empty cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MolsInstance {
    pub n: usize,
    /// `layers[m][row * n + col]`.
    pub layers: Vec<Vec<Option<usize>>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MolsError {
    #[error("layer {layer}: symbol {symbol} repeats in row {row}")]
    RowRepeat { layer: usize, row: usize, symbol: usize },
    #[error("layer {layer}: symbol {symbol} repeats in column {col}")]
    ColRepeat { layer: usize, col: usize, symbol: usize },
    #[error("layers {a} and {b}: ordered pair ({s1},{s2}) appears twice")]
    NotOrthogonal { a: usize, b: usize, s1: usize, s2: usize },
    #[error("layer {layer} has wrong size")]
    WrongSize { layer: usize },
    #[error("symbol {symbol} out of range 1..={n}")]
    SymbolRange { symbol: usize, n: usize },
}

impl MolsInstance {
    pub fn empty(n: usize, layers: usize) -> Self {
        MolsInstance {
            n,
            layers: vec![vec![None; n * n]; layers],
        }
    }

    pub fn r(&self) -> usize {
        self.layers.len() + 2
    }

    pub fn get(&self, layer: usize, row: usize, col: usize) -> Option<usize> {
        self.layers[layer][row * self.n + col]
    }

    pub fn set(&mut self, layer: usize, row: usize, col: usize, symbol: usize) {
        self.layers[layer][row * self.n + col] = Some(symbol);
    }

    pub fn filled_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for row in 0..self.n {
            for col in 0..self.n {
                if (0..self.layers.len()).any(|m| self.get(m, row, col).is_some()) {
                    out.push((row, col));
                }
            }
        }
        out
    }

    pub fn is_total(&self) -> bool {
        self.layers.iter().all(|l| l.iter().all(Option::is_some))
    }

    pub fn validate(&self) -> Result<(), MolsError> {
        let n = self.n;
        for (m, layer) in self.layers.iter().enumerate() {
            if layer.len() != n * n {
                return Err(MolsError::WrongSize { layer: m });
            }
            for &cell in layer.iter().flatten() {
                if cell < 1 || cell > n {
                    return Err(MolsError::SymbolRange { symbol: cell, n });
                }
            }
            for row in 0..n {
                let mut seen = vec![false; n + 1];
                for col in 0..n {
                    if let Some(s) = self.get(m, row, col) {
                        if seen[s] {
                            return Err(MolsError::RowRepeat { layer: m, row, symbol: s });
                        }
                        seen[s] = true;
                    }
                }
            }
            for col in 0..n {
                let mut seen = vec![false; n + 1];
                for row in 0..n {
                    if let Some(s) = self.get(m, row, col) {
                        if seen[s] {
                            return Err(MolsError::ColRepeat { layer: m, col, symbol: s });
                        }
                        seen[s] = true;
                    }
                }
            }
        }
        // pairwise orthogonality over commonly filled cells
        for a in 0..self.layers.len() {
            for b in a + 1..self.layers.len() {
                let mut seen = std::collections::BTreeSet::new();
                for row in 0..n {
                    for col in 0..n {
                        if let (Some(s1), Some(s2)) = (self.get(a, row, col), self.get(b, row, col))
                        {
                            if !seen.insert((s1, s2)) {
                                return Err(MolsError::NotOrthogonal { a, b, s1, s2 });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// True when `self` agrees with `other` on every cell `other` fills.
    pub fn extends(&self, other: &MolsInstance) -> bool {
        self.n == other.n
            && self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| b.iter().zip(a).all(|(o, s)| o.is_none() || o == s))
    }

    pub fn row_vertex(&self, row: usize) -> usize {
        (self.r() - 2) * self.n + row
    }

    pub fn col_vertex(&self, col: usize) -> usize {
        (self.r() - 1) * self.n + col
    }

    pub fn symbol_vertex(&self, layer: usize, symbol: usize) -> usize {
        layer * self.n + symbol - 1
    }
}

/// A per-cell clique fragment of the instance graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub row: usize,
    pub col: usize,
    /// Sorted vertex set: row, column and one symbol per filled layer.
    pub verts: Vec<usize>,
    /// Whether the row-column edge was contributed by several layers
    /// (recorded for diagnostics, otherwise unused).
    pub multi_layer: bool,
}

/// Builds the instance graph and its edge-disjoint clique fragments.
/// Each fragment is complete and contains the row-column edge of its cell.
pub fn mols_to_graph(m: &MolsInstance) -> Result<(MultipartiteGraph, Vec<Fragment>), MolsError> {
    m.validate()?;
    let r = m.r();
    let n = m.n;
    let mut g = MultipartiteGraph::empty(r, n);
    let mut fragments = Vec::new();
    for (row, col) in m.filled_cells() {
        let mut verts = vec![m.row_vertex(row), m.col_vertex(col)];
        let mut filled_layers = 0;
        for layer in 0..m.layers.len() {
            if let Some(s) = m.get(layer, row, col) {
                verts.push(m.symbol_vertex(layer, s));
                filled_layers += 1;
            }
        }
        verts.sort_unstable();
        for (i, &u) in verts.iter().enumerate() {
            for &v in &verts[i + 1..] {
                debug_assert!(!g.has_edge(u, v), "fragments must be edge-disjoint");
                g.insert_edge(u, v);
            }
        }
        fragments.push(Fragment {
            row,
            col,
            verts,
            multi_layer: filled_layers > 1,
        });
    }
    Ok((g, fragments))
}

/// Row/column/symbol usage plus the fragment-membership counters that the
/// greedy extension maintains.
#[derive(Clone, Debug, Default)]
pub struct UsageCounters {
    pub row_use: Vec<usize>,
    pub col_use: Vec<usize>,
    /// Per (layer, symbol).
    pub symbol_use: Vec<Vec<usize>>,
    /// `s(v, p)`: fragment membership per graph vertex.
    pub membership: Vec<usize>,
}

impl UsageCounters {
    pub fn from_instance(m: &MolsInstance) -> Self {
        let n = m.n;
        let mut c = UsageCounters {
            row_use: vec![0; n],
            col_use: vec![0; n],
            symbol_use: vec![vec![0; n + 1]; m.layers.len()],
            membership: vec![0; m.r() * n],
        };
        for (row, col) in m.filled_cells() {
            c.row_use[row] += 1;
            c.col_use[col] += 1;
            c.membership[m.row_vertex(row)] += 1;
            c.membership[m.col_vertex(col)] += 1;
            for layer in 0..m.layers.len() {
                if let Some(s) = m.get(layer, row, col) {
                    c.symbol_use[layer][s] += 1;
                    c.membership[m.symbol_vertex(layer, s)] += 1;
                }
            }
        }
        c
    }

    pub fn max_line_use(&self) -> usize {
        let rows = self.row_use.iter().copied().max().unwrap_or(0);
        let cols = self.col_use.iter().copied().max().unwrap_or(0);
        let syms = self
            .symbol_use
            .iter()
            .flat_map(|l| l.iter().copied())
            .max()
            .unwrap_or(0);
        rows.max(cols).max(syms)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExtendConfig {
    /// Usage-rate constant; the asymptotic defaults are 1/25 for r = 3 and
    /// 9/(10^7 r^3) for larger r, both vacuous at small n, so practical
    /// runs configure a larger value.
    pub c_r: f64,
    pub epsilon: f64,
}

impl ExtendConfig {
    pub fn paper_default(r: usize) -> Self {
        let c_r = if r == 3 {
            1.0 / 25.0
        } else {
            9.0 / (1.0e7 * (r * r * r) as f64)
        };
        ExtendConfig { c_r, epsilon: c_r / 10.0 }
    }

    pub fn practical() -> Self {
        ExtendConfig { c_r: 0.6, epsilon: 0.05 }
    }

    fn busy_threshold(&self, n: usize) -> f64 {
        10.0 * (self.c_r - self.epsilon) * n as f64 / 9.0
    }

    fn inductive_bound(&self, n: usize) -> f64 {
        10.0 / 9.0 * (self.c_r - self.epsilon * self.epsilon) * n as f64
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtendError {
    #[error("fragment {fragment}: no eligible vertex in class {class} (all candidates busy or adjacent)")]
    Stuck { fragment: usize, class: usize },
}

/// Greedily extends each fragment to a full transversal clique, keeping the
/// extensions pairwise edge-disjoint, avoiding vertices whose membership
/// count has crossed the busy threshold, and tie-breaking by least vertex
/// id. Returns the extended cliques.
pub fn greedy_extend_fragments(
    g: &MultipartiteGraph,
    fragments: &[Fragment],
    counters: &mut UsageCounters,
    cfg: &ExtendConfig,
) -> Result<Vec<Vec<usize>>, ExtendError> {
    let r = g.class_count();
    let n = g.class_size();
    let mut used = g.clone(); // G_{p-1}: edges unavailable for extensions
    let mut extended: Vec<Vec<usize>> = Vec::new();
    let busy = cfg.busy_threshold(n);
    let bound = cfg.inductive_bound(n);
    for (p, frag) in fragments.iter().enumerate() {
        let mut clique = frag.verts.clone();
        let have: Vec<usize> = clique.iter().map(|&v| g.class_of(v)).collect();
        for j in 0..r {
            if have.contains(&j) {
                continue;
            }
            // candidates: not busy, and unseen edges to the whole clique
            let pick = g
                .class_range(j)
                .find(|&x| {
                    (counters.membership[x] as f64) < busy
                        && clique.iter().all(|&u| !used.has_edge(u, x))
                });
            match pick {
                Some(x) => {
                    for &u in &clique {
                        used.insert_edge(u, x);
                    }
                    clique.push(x);
                    counters.membership[x] += 1;
                }
                None => return Err(ExtendError::Stuck { fragment: p, class: j }),
            }
        }
        clique.sort_unstable();
        // the inductive membership bound, checked whenever it is meaningful
        // at this size (threshold gap at least one vertex)
        if bound - busy >= 1.0 {
            debug_assert!(clique
                .iter()
                .all(|&v| (counters.membership[v] as f64) <= bound));
        }
        extended.push(clique);
    }
    Ok(extended)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompleteError {
    #[error("invalid instance: {0}")]
    Invalid(#[from] MolsError),
    #[error("fragment extension failed: {0}")]
    Extend(#[from] ExtendError),
    #[error("no completion exists")]
    Infeasible(InfeasibilityCertificate),
    #[error("search budget exhausted after {placements} placements")]
    BudgetExhausted { placements: u64 },
}

#[derive(Clone, Copy, Debug)]
pub enum CompleteMode {
    /// Exhaustive search on the complement.
    Exact { budget: u64 },
}

/// Completes a partial instance to a total sequence of mutually orthogonal
/// Latin squares, or proves none exists (within budget). The output agrees
/// with the input on every filled cell.
pub fn complete_mols(m: &MolsInstance, mode: CompleteMode) -> Result<MolsInstance, CompleteError> {
    complete_mols_with(m, |g| match mode {
        CompleteMode::Exact { budget } => match exact_decompose(g, budget) {
            DecomposeOutcome::Decomposed(d) => Ok(d),
            DecomposeOutcome::Infeasible(cert) => Err(CompleteError::Infeasible(cert)),
            DecomposeOutcome::BudgetExhausted { placements } => {
                Err(CompleteError::BudgetExhausted { placements })
            }
        },
    })
}

/// Completion with a caller-supplied decomposer for the complement graph.
pub fn complete_mols_with(
    m: &MolsInstance,
    mut decompose: impl FnMut(&MultipartiteGraph) -> Result<CliqueDecomposition, CompleteError>,
) -> Result<MolsInstance, CompleteError> {
    let (g, fragments) = mols_to_graph(m)?;
    let r = m.r();
    let extended = if r == 3 {
        fragments.iter().map(|f| f.verts.clone()).collect()
    } else {
        let mut counters = UsageCounters::from_instance(m);
        greedy_extend_fragments(&g, &fragments, &mut counters, &ExtendConfig::practical())?
    };
    let g_q = MultipartiteGraph::of_cliques(r, m.n, &extended);
    let complement = MultipartiteGraph::complete(r, m.n).difference(&g_q);
    assert!(
        complement.is_kr_divisible(),
        "complement of a clique union must be divisible"
    );
    let dec = decompose(&complement)?;
    debug_assert!(verify_decomposition(&complement, &dec));
    let full = CliqueDecomposition::new(
        dec.cliques.iter().cloned().chain(extended).collect(),
    );
    let out = graph_to_mols(&full, r, m.n).expect("full decomposition must translate");
    assert!(out.extends(m), "completion must preserve the input cells");
    out.validate().expect("completion must be a valid instance");
    Ok(out)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("decomposition does not cover the complete host")]
    NotComplete,
}

/// Translates a decomposition of the complete balanced r-partite host back
/// into a total instance.
pub fn graph_to_mols(
    d: &CliqueDecomposition,
    r: usize,
    n: usize,
) -> Result<MolsInstance, TranslateError> {
    let host = MultipartiteGraph::complete(r, n);
    if !verify_decomposition(&host, d) {
        return Err(TranslateError::NotComplete);
    }
    let mut out = MolsInstance::empty(n, r - 2);
    for clique in &d.cliques {
        let mut row = None;
        let mut col = None;
        let mut symbols = vec![0usize; r - 2];
        for &v in clique {
            let class = v / n;
            let idx = v % n;
            if class == r - 2 {
                row = Some(idx);
            } else if class == r - 1 {
                col = Some(idx);
            } else {
                symbols[class] = idx + 1;
            }
        }
        let (row, col) = (row.unwrap(), col.unwrap());
        for (layer, &s) in symbols.iter().enumerate() {
            out.set(layer, row, col, s);
        }
    }
    Ok(out)
}
