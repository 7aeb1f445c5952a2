//! Text formats, Graphviz export and the `tgr` command line for
//! [`termgraph_core`].

pub mod cli;
pub mod document;
pub mod dot;

pub use document::{parse, parse_graph, serialize, serialize_graph, Document, NamedMatch, ParseError};
pub use dot::to_dot;
