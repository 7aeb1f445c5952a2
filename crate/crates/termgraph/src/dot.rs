//! Graphviz rendering: nodes as bullets, edges as labelled boxes with one
//! port per argument, and interface triangles above and below.

use std::fmt::Write as _;

use termgraph_core::{Dhg, NodeId};

use crate::document::canonical_names;

fn node_id(n: NodeId, names: &std::collections::BTreeMap<NodeId, String>) -> String {
    format!("\"{}\"", names[&n])
}

pub fn to_dot(name: &str, g: &Dhg) -> String {
    let names = canonical_names(g);
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{name}\" {{");
    out.push_str("  rankdir=TB;\n  node [fontname=\"Helvetica\", fontsize=10];\n  edge [arrowsize=0.6];\n");

    out.push_str("  { rank=min;");
    for p in 0..g.inputs() {
        let _ = write!(out, " \"input{p}\" [shape=triangle, label=\"{p}\"];");
    }
    out.push_str(" }\n  { rank=max;");
    for q in 0..g.outputs().len() {
        let _ = write!(out, " \"output{q}\" [shape=invtriangle, label=\"{q}\"];");
    }
    out.push_str(" }\n");

    for n in g.nodes() {
        let _ = writeln!(out, "  {} [shape=point, width=0.1, xlabel=\"{}\"];", node_id(n, &names), names[&n]);
    }
    for (e, edge) in g.edges() {
        let label = if edge.ins.is_empty() {
            edge.label.clone()
        } else {
            let ports: Vec<String> = (0..edge.ins.len()).map(|p| format!("<p{p}>")).collect();
            format!("{{{{{}}}|{}}}", ports.join("|"), edge.label)
        };
        let _ = writeln!(out, "  \"{e}\" [shape=record, label=\"{label}\"];");
        for (p, n) in edge.ins.iter().enumerate() {
            let _ = writeln!(out, "  {} -> \"{e}\":p{p};", node_id(*n, &names));
        }
        let _ = writeln!(out, "  \"{e}\" -> {};", node_id(NodeId::Inner(edge.out), &names));
    }
    for p in 0..g.inputs() {
        let _ = writeln!(out, "  \"input{p}\" -> {} [arrowhead=none];", node_id(NodeId::Input(p), &names));
    }
    for (q, n) in g.outputs().iter().enumerate() {
        let _ = writeln!(out, "  {} -> \"output{q}\";", node_id(*n, &names));
    }
    out.push_str("}\n");
    out
}
