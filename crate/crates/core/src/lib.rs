//! Clique decompositions of balanced r-partite graphs.
//!
//! The central object is [`MultipartiteGraph`]: `r` vertex classes of equal
//! size `n` with no intra-class edges. The library provides
//!
//! * divisibility and degree predicates, clique enumeration and an exact
//!   backtracking decomposer ([`graph`], [`exact`]);
//! * the correspondence between mutually orthogonal Latin squares and
//!   K_r-decompositions of complete r-partite graphs, with a completion
//!   pipeline ([`latin`]);
//! * extremal lower-bound constructions used as hard test instances
//!   ([`extremal`]);
//! * fractional decompositions by exact rational LP and a greedy approximate
//!   decomposer ([`fractional`]);
//! * flow-based degree repair: degree-constrained subgraphs, a divisibility
//!   fixer and a degree-reduction step ([`flows`]);
//! * labelled template graphs and greedy edge-disjoint embedding
//!   ([`embedding`]);
//! * transformer/absorber gadgets with explicit certifying decompositions
//!   ([`gadgets`]);
//! * random vertex partitions, partition sequences and reserved quasirandom
//!   subgraphs ([`partitions`]);
//! * perfect clique matchings and the cross-edge cover ([`cover`]);
//! * excess multigraphs, edge and degree balancers ([`balancing`]);
//! * the iterative-absorption pipeline orchestrating all of the above
//!   ([`pipeline`]).
//!
//! Decompositions returned anywhere in this crate are verified witnesses:
//! every constructor that claims decomposability hands back the clique list
//! so the claim can be re-checked with [`graph::verify_decomposition`].

pub mod balancing;
mod bitset;
pub mod cover;
pub mod embedding;
pub mod exact;
pub mod extremal;
pub mod flows;
pub mod fractional;
pub mod gadgets;
pub mod graph;
pub mod io;
pub mod latin;
mod par;
mod simplex;
pub mod partitions;
pub mod pipeline;

pub use bitset::BitSet;
pub use par::configure_threads;
pub use exact::{exact_decompose, DecomposeOutcome};
pub use graph::{verify_decomposition, CliqueDecomposition, MultipartiteGraph};
