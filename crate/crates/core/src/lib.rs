//! Term graph rewriting by double pushouts over directed hypergraphs.
//!
//! Term graphs (jungles) are acyclic hypergraphs in which every inner node is
//! produced by exactly one labelled hyperedge. Rules are spans `L ← ⊥ → R` of
//! interface-preserving homomorphisms; a rewrite step deletes an injective
//! match of `L` and glues in `R` along the shared interface. The crate checks
//! the side conditions that make the result a term graph again, decomposes an
//! application graph around a match into an image context, and evaluates term
//! graphs in gs-monoidal targets to confirm that steps preserve meaning.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod algebra;
pub mod graph;
pub mod iso;
mod unionfind;

pub use algebra::{
    bang, bottom, build, dup, exchange, identity, prim, seq, seq_embedded, ten, ten_embedded,
    to_expression, AlgebraError, Composite, Embedding, GsExpr,
};
pub use graph::{
    as_term_graph, validate_dhg, Dhg, DhgError, Edge, EdgeId, InnerId, NodeId, RawGraph,
    Signature, SignatureError, Site, TermGraph, TermGraphError,
};
pub use iso::{iso, iso_seeded, Isomorphism};
pub mod matching;
pub mod dpo;
pub mod context;
pub mod semantics;
pub mod random;
