//! File codecs: graph JSON, partition JSON and the MOLS grid text format.
//!
//! * Graph JSON: `{"r": int, "n": int, "edges": [[u,v],...]}` with vertices
//!   `0..r*n-1`, `class(v) = v div n`, edges sorted with `u < v`.
//! * Partition JSON: `{"cells": [[vertex ids], ...]}`.
//! * MOLS text: one line per grid row, cells comma-separated, `.` for an
//!   empty cell; layers concatenated with a single blank line in between.

use crate::graph::{CliqueDecomposition, GraphError, MultipartiteGraph};
use crate::latin::MolsInstance;
use crate::partitions::KPartition;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("grid line {line}: {reason}")]
    Grid { line: usize, reason: String },
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    r: usize,
    n: usize,
    edges: Vec<(usize, usize)>,
}

pub fn graph_to_json(g: &MultipartiteGraph) -> String {
    let doc = GraphJson {
        r: g.class_count(),
        n: g.class_size(),
        edges: g.edges(),
    };
    serde_json::to_string_pretty(&doc).expect("graph serialization cannot fail")
}

pub fn graph_from_json(text: &str) -> Result<MultipartiteGraph, CodecError> {
    let doc: GraphJson = serde_json::from_str(text)?;
    Ok(MultipartiteGraph::from_edges(doc.r, doc.n, doc.edges)?)
}

#[derive(Serialize, Deserialize)]
struct DecompositionJson {
    cliques: Vec<Vec<usize>>,
}

pub fn decomposition_to_json(d: &CliqueDecomposition) -> String {
    serde_json::to_string_pretty(&DecompositionJson {
        cliques: d.cliques.clone(),
    })
    .expect("decomposition serialization cannot fail")
}

pub fn decomposition_from_json(text: &str) -> Result<CliqueDecomposition, CodecError> {
    let doc: DecompositionJson = serde_json::from_str(text)?;
    Ok(CliqueDecomposition::new(doc.cliques))
}

pub fn partition_to_json(p: &KPartition) -> String {
    serde_json::to_string_pretty(&serde_json::json!({ "cells": p.cells }))
        .expect("partition serialization cannot fail")
}

pub fn partition_from_json(text: &str) -> Result<KPartition, CodecError> {
    #[derive(Deserialize)]
    struct Doc {
        cells: Vec<Vec<usize>>,
    }
    let mut doc: Doc = serde_json::from_str(text)?;
    for c in &mut doc.cells {
        c.sort_unstable();
    }
    Ok(KPartition { cells: doc.cells })
}

pub fn mols_to_text(m: &MolsInstance) -> String {
    let mut out = String::new();
    for (li, layer) in m.layers.iter().enumerate() {
        if li > 0 {
            out.push('\n');
        }
        for row in 0..m.n {
            let line: Vec<String> = (0..m.n)
                .map(|col| match layer[row * m.n + col] {
                    Some(s) => s.to_string(),
                    None => ".".to_string(),
                })
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn mols_from_text(text: &str) -> Result<MolsInstance, CodecError> {
    let mut layers: Vec<Vec<Vec<Option<usize>>>> = vec![Vec::new()];
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            if !layers.last().unwrap().is_empty() {
                layers.push(Vec::new());
            }
            continue;
        }
        let row: Result<Vec<Option<usize>>, CodecError> = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                if cell == "." {
                    Ok(None)
                } else {
                    cell.parse::<usize>().map(Some).map_err(|e| CodecError::Grid {
                        line: ln + 1,
                        reason: format!("bad cell {cell:?}: {e}"),
                    })
                }
            })
            .collect();
        layers.last_mut().unwrap().push(row?);
    }
    if layers.last().is_some_and(|l| l.is_empty()) {
        layers.pop();
    }
    if layers.is_empty() {
        return Err(CodecError::Grid { line: 0, reason: "empty grid".into() });
    }
    let n = layers[0].len();
    for (li, layer) in layers.iter().enumerate() {
        if layer.len() != n || layer.iter().any(|row| row.len() != n) {
            return Err(CodecError::Grid {
                line: 0,
                reason: format!("layer {} is not {n} x {n}", li + 1),
            });
        }
    }
    Ok(MolsInstance {
        n,
        layers: layers
            .into_iter()
            .map(|rows| rows.into_iter().flatten().collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_json_round_trip() {
        let g = MultipartiteGraph::from_edges(3, 2, [(0, 2), (0, 4), (2, 4)]).unwrap();
        let back = graph_from_json(&graph_to_json(&g)).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn mols_text_round_trip() {
        let mut m = MolsInstance::empty(3, 2);
        m.set(0, 0, 0, 1);
        m.set(0, 2, 1, 3);
        m.set(1, 0, 0, 2);
        let text = mols_to_text(&m);
        let back = mols_from_text(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn mols_text_shape_errors() {
        assert!(mols_from_text("1,2\n3\n").is_err());
        assert!(mols_from_text("").is_err());
        assert!(mols_from_text("1,x\n.,2\n").is_err());
    }

    #[test]
    fn partition_json_round_trip() {
        let g = MultipartiteGraph::complete(3, 2);
        let p = KPartition::trivial(&g);
        let back = partition_from_json(&partition_to_json(&p)).unwrap();
        assert_eq!(p, back);
    }
}
