//! The gs-monoidal structure on hypergraphs: sequential composition `;`,
//! parallel composition `⊗`, the wiring constants `id`, `X`, `∇`, `!`, the
//! interface graph `⊥`, single-edge primitives, and the translation between
//! graphs and gs-monoidal expressions.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graph::{Dhg, Edge, EdgeId, InnerId, NodeId, Signature, TermGraph};
use crate::unionfind::UnionFind;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("cannot compose: left side has {left} outputs, right side has {right} inputs")]
    InterfaceMismatch { left: usize, right: usize },
    #[error("label `{0}` is not in the signature")]
    UnknownLabel(String),
}

/// Where the nodes and edges of one operand ended up in a composite graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Embedding {
    pub nodes: BTreeMap<NodeId, NodeId>,
    pub edges: BTreeMap<EdgeId, EdgeId>,
}

impl Embedding {
    /// `self` followed by `next`.
    pub fn then(&self, next: &Embedding) -> Embedding {
        Embedding {
            nodes: self.nodes.iter().map(|(a, b)| (*a, next.nodes[b])).collect(),
            edges: self.edges.iter().map(|(a, b)| (*a, next.edges[b])).collect(),
        }
    }
}

/// A composed graph together with the embeddings of both operands.
#[derive(Clone, Debug)]
pub struct Composite {
    pub graph: Dhg,
    pub left: Embedding,
    pub right: Embedding,
}

/// `f ; g`: glue input `i` of `g` onto output `i` of `f`.
pub fn seq(f: &Dhg, g: &Dhg) -> Result<Dhg, AlgebraError> {
    seq_embedded(f, g).map(|c| c.graph)
}

pub fn seq_embedded(f: &Dhg, g: &Dhg) -> Result<Composite, AlgebraError> {
    if f.outputs().len() != g.inputs() {
        return Err(AlgebraError::InterfaceMismatch { left: f.outputs().len(), right: g.inputs() });
    }
    let f_nodes: Vec<NodeId> = f.nodes().collect();
    let g_nodes: Vec<NodeId> = g.nodes().collect();
    let f_index: BTreeMap<NodeId, usize> = f_nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let g_index: BTreeMap<NodeId, usize> =
        g_nodes.iter().enumerate().map(|(i, n)| (*n, f_nodes.len() + i)).collect();

    let mut uf = UnionFind::new(f_nodes.len() + g_nodes.len());
    for (i, out) in f.outputs().iter().enumerate() {
        uf.union(f_index[out], g_index[&NodeId::Input(i)]);
    }
    // f's nodes come first, so every glued class is represented on the f side.
    let least = uf.least_members();
    let mut realized: BTreeMap<usize, NodeId> = BTreeMap::new();
    let mut inner = BTreeSet::new();
    let mut next = 0u32;
    for rep in least.iter().copied().collect::<BTreeSet<_>>() {
        let node = match f_nodes.get(rep) {
            Some(NodeId::Input(i)) => NodeId::Input(*i),
            _ => {
                let id = InnerId(next);
                next += 1;
                inner.insert(id);
                NodeId::Inner(id)
            }
        };
        realized.insert(rep, node);
    }
    let at = |idx: usize| realized[&least[idx]];
    let left_nodes: BTreeMap<NodeId, NodeId> = f_index.iter().map(|(n, i)| (*n, at(*i))).collect();
    let right_nodes: BTreeMap<NodeId, NodeId> = g_index.iter().map(|(n, i)| (*n, at(*i))).collect();

    let mut edges = BTreeMap::new();
    let mut left_edges = BTreeMap::new();
    let mut right_edges = BTreeMap::new();
    let mut next_edge = 0u32;
    for (part, nodes, emb) in [(f, &left_nodes, &mut left_edges), (g, &right_nodes, &mut right_edges)] {
        for (id, e) in part.edges() {
            let new_id = EdgeId(next_edge);
            next_edge += 1;
            emb.insert(id, new_id);
            edges.insert(new_id, relabel_edge(e, nodes));
        }
    }
    let outputs = g.outputs().iter().map(|n| right_nodes[n]).collect();
    Ok(Composite {
        graph: Dhg::from_parts(f.inputs(), inner, edges, outputs),
        left: Embedding { nodes: left_nodes, edges: left_edges },
        right: Embedding { nodes: right_nodes, edges: right_edges },
    })
}

fn relabel_edge(e: &Edge, nodes: &BTreeMap<NodeId, NodeId>) -> Edge {
    let out = nodes[&NodeId::Inner(e.out)].as_inner().expect("edge outputs stay inner");
    Edge { label: e.label.clone(), out, ins: e.ins.iter().map(|n| nodes[n]).collect() }
}

/// `f ⊗ g`: disjoint union, with `g`'s inputs shifted past `f`'s.
pub fn ten(f: &Dhg, g: &Dhg) -> Dhg {
    ten_embedded(f, g).graph
}

pub fn ten_embedded(f: &Dhg, g: &Dhg) -> Composite {
    let mut inner = BTreeSet::new();
    let mut next = 0u32;
    let mut place = |part: &Dhg, shift: usize| -> BTreeMap<NodeId, NodeId> {
        part.nodes()
            .map(|n| {
                let m = match n {
                    NodeId::Input(i) => NodeId::Input(i + shift),
                    NodeId::Inner(_) => {
                        let id = InnerId(next);
                        next += 1;
                        inner.insert(id);
                        NodeId::Inner(id)
                    }
                };
                (n, m)
            })
            .collect()
    };
    let left_nodes = place(f, 0);
    let right_nodes = place(g, f.inputs());
    let mut edges = BTreeMap::new();
    let mut left_edges = BTreeMap::new();
    let mut right_edges = BTreeMap::new();
    let mut next_edge = 0u32;
    for (part, nodes, emb) in [(f, &left_nodes, &mut left_edges), (g, &right_nodes, &mut right_edges)] {
        for (id, e) in part.edges() {
            let new_id = EdgeId(next_edge);
            next_edge += 1;
            emb.insert(id, new_id);
            edges.insert(new_id, relabel_edge(e, nodes));
        }
    }
    let outputs = f
        .outputs()
        .iter()
        .map(|n| left_nodes[n])
        .chain(g.outputs().iter().map(|n| right_nodes[n]))
        .collect();
    Composite {
        graph: Dhg::from_parts(f.inputs() + g.inputs(), inner, edges, outputs),
        left: Embedding { nodes: left_nodes, edges: left_edges },
        right: Embedding { nodes: right_nodes, edges: right_edges },
    }
}

fn wiring(inputs: usize, outputs: impl IntoIterator<Item = usize>) -> TermGraph {
    let outputs = outputs.into_iter().map(NodeId::Input).collect();
    TermGraph::new(Dhg::from_parts(inputs, BTreeSet::new(), BTreeMap::new(), outputs))
        .expect("edge-free graphs without inner nodes are term graphs")
}

/// `id_k`.
pub fn identity(k: usize) -> TermGraph {
    wiring(k, 0..k)
}

/// `X_{m,n} : m + n → n + m`.
pub fn exchange(m: usize, n: usize) -> TermGraph {
    wiring(m + n, (m..m + n).chain(0..m))
}

/// `∇_k : k → 2k`.
pub fn dup(k: usize) -> TermGraph {
    wiring(k, (0..k).chain(0..k))
}

/// `!_k : k → 0`.
pub fn bang(k: usize) -> TermGraph {
    wiring(k, core::iter::empty())
}

/// `⊥_{i,j}`: `i` inputs, `j` distinct isolated inner output nodes, no edges.
pub fn bottom(i: usize, j: usize) -> Dhg {
    let ids: Vec<InnerId> = (0..j as u32).map(InnerId).collect();
    let outputs = ids.iter().map(|n| NodeId::Inner(*n)).collect();
    Dhg::from_parts(i, ids.into_iter().collect(), BTreeMap::new(), outputs)
}

/// The single-edge graph `arity(label) → 1`.
pub fn prim(sig: &Signature, label: &str) -> Result<TermGraph, AlgebraError> {
    let arity = sig.arity(label).ok_or_else(|| AlgebraError::UnknownLabel(label.into()))?;
    let out = InnerId(0);
    let edge = Edge::new(label, (0..arity).map(NodeId::Input).collect(), out);
    let g = Dhg::from_parts(
        arity,
        [out].into_iter().collect(),
        [(EdgeId(0), edge)].into_iter().collect(),
        alloc::vec![NodeId::Inner(out)],
    );
    Ok(TermGraph::new(g).expect("a single edge is a term graph"))
}

/// Expressions over the generators of the free gs-monoidal category.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GsExpr {
    Prim(String),
    Id(usize),
    Exch(usize, usize),
    Dup(usize),
    Bang(usize),
    Seq(Box<GsExpr>, Box<GsExpr>),
    Ten(Box<GsExpr>, Box<GsExpr>),
}

impl GsExpr {
    pub fn seq(a: GsExpr, b: GsExpr) -> GsExpr {
        GsExpr::Seq(Box::new(a), Box::new(b))
    }

    pub fn ten(a: GsExpr, b: GsExpr) -> GsExpr {
        GsExpr::Ten(Box::new(a), Box::new(b))
    }

    pub fn prim(label: impl Into<String>) -> GsExpr {
        GsExpr::Prim(label.into())
    }

    /// The derived type `m → n`, checking composability throughout.
    pub fn interface(&self, sig: &Signature) -> Result<(usize, usize), AlgebraError> {
        Ok(match self {
            GsExpr::Prim(l) => (sig.arity(l).ok_or_else(|| AlgebraError::UnknownLabel(l.clone()))?, 1),
            GsExpr::Id(k) => (*k, *k),
            GsExpr::Exch(m, n) => (m + n, m + n),
            GsExpr::Dup(k) => (*k, 2 * k),
            GsExpr::Bang(k) => (*k, 0),
            GsExpr::Seq(a, b) => {
                let (am, an) = a.interface(sig)?;
                let (bm, bn) = b.interface(sig)?;
                if an != bm {
                    return Err(AlgebraError::InterfaceMismatch { left: an, right: bm });
                }
                (am, bn)
            }
            GsExpr::Ten(a, b) => {
                let (am, an) = a.interface(sig)?;
                let (bm, bn) = b.interface(sig)?;
                (am + bm, an + bn)
            }
        })
    }

    /// Number of `Prim` leaves.
    pub fn prim_count(&self) -> usize {
        match self {
            GsExpr::Prim(_) => 1,
            GsExpr::Seq(a, b) | GsExpr::Ten(a, b) => a.prim_count() + b.prim_count(),
            _ => 0,
        }
    }
}

impl fmt::Display for GsExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, 0, f)
    }
}

// Precedence: 0 = `;`, 1 = `*`, 2 = atom. Both operators associate to the left.
fn write_expr(e: &GsExpr, ctx: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let (prec, parts) = match e {
        GsExpr::Prim(l) => return write!(f, "prim:{l}"),
        GsExpr::Id(k) => return write!(f, "id:{k}"),
        GsExpr::Exch(m, n) => return write!(f, "exch:{m},{n}"),
        GsExpr::Dup(k) => return write!(f, "dup:{k}"),
        GsExpr::Bang(k) => return write!(f, "bang:{k}"),
        GsExpr::Seq(a, b) => (0, (a, b, " ; ")),
        GsExpr::Ten(a, b) => (1, (a, b, " * ")),
    };
    let (a, b, op) = parts;
    if prec < ctx {
        f.write_str("(")?;
    }
    write_expr(a, prec, f)?;
    f.write_str(op)?;
    write_expr(b, prec + 1, f)?;
    if prec < ctx {
        f.write_str(")")?;
    }
    Ok(())
}

/// Interprets an expression as a graph by structural recursion.
pub fn build(sig: &Signature, e: &GsExpr) -> Result<Dhg, AlgebraError> {
    e.interface(sig)?;
    build_typed(sig, e)
}

fn build_typed(sig: &Signature, e: &GsExpr) -> Result<Dhg, AlgebraError> {
    Ok(match e {
        GsExpr::Prim(l) => prim(sig, l)?.into_dhg(),
        GsExpr::Id(k) => identity(*k).into_dhg(),
        GsExpr::Exch(m, n) => exchange(*m, *n).into_dhg(),
        GsExpr::Dup(k) => dup(*k).into_dhg(),
        GsExpr::Bang(k) => bang(*k).into_dhg(),
        GsExpr::Seq(a, b) => seq(&build_typed(sig, a)?, &build_typed(sig, b)?)?,
        GsExpr::Ten(a, b) => ten(&build_typed(sig, a)?, &build_typed(sig, b)?),
    })
}

/// Decomposes a term graph into alternating wiring and primitive layers.
///
/// Live edges are placed in the earliest layer their inputs allow; garbage
/// edges follow in layers of their own and their results are discarded by the
/// final wiring layer.
pub fn to_expression(t: &TermGraph) -> GsExpr {
    let live = t.live_nodes();
    let mut level: BTreeMap<EdgeId, usize> = BTreeMap::new();
    let producer_level = |n: &NodeId, level: &BTreeMap<EdgeId, usize>| match n {
        NodeId::Input(_) => 0,
        NodeId::Inner(id) => level[&t.defining_edge(*id).expect("term graph")],
    };
    let mut live_depth = 0;
    for e in t.topological_order() {
        let edge = t.edge(*e).unwrap();
        if live.contains(&NodeId::Inner(edge.out)) {
            let l = 1 + edge.ins.iter().map(|n| producer_level(n, &level)).max().unwrap_or(0);
            live_depth = live_depth.max(l);
            level.insert(*e, l);
        }
    }
    for e in t.topological_order() {
        let edge = t.edge(*e).unwrap();
        if !level.contains_key(e) {
            let deps = edge.ins.iter().map(|n| producer_level(n, &level)).max().unwrap_or(0);
            level.insert(*e, 1 + deps.max(live_depth));
        }
    }
    let depth = level.values().copied().max().unwrap_or(0);
    let mut layers: Vec<Vec<EdgeId>> = alloc::vec![Vec::new(); depth];
    for (e, l) in &level {
        layers[l - 1].push(*e);
    }

    let mut wires: Vec<NodeId> = (0..t.inputs()).map(NodeId::Input).collect();
    let mut stages = Vec::new();
    for (idx, layer) in layers.iter().enumerate() {
        let mut needed: BTreeSet<NodeId> = t.outputs().iter().copied().collect();
        for later in &layers[idx + 1..] {
            for e in later {
                needed.extend(t.edge(*e).unwrap().ins.iter().copied());
            }
        }
        let carried: Vec<NodeId> = wires.iter().copied().filter(|n| needed.contains(n)).collect();
        let mut target: Vec<NodeId> = Vec::new();
        let mut prims = Vec::new();
        for e in layer {
            let edge = t.edge(*e).unwrap();
            target.extend(edge.ins.iter().copied());
            prims.push(GsExpr::Prim(edge.label.clone()));
        }
        target.extend(carried.iter().copied());
        stages.push(wiring_expr(&wires, &target));
        prims.push(GsExpr::Id(carried.len()));
        stages.push(ten_all(prims));
        wires = layer.iter().map(|e| NodeId::Inner(t.edge(*e).unwrap().out)).chain(carried).collect();
    }
    stages.push(wiring_expr(&wires, t.outputs()));
    seq_all(stages, t.inputs())
}

/// A wiring expression taking the distinct values `from` to the list `to`,
/// every element of which occurs in `from`.
fn wiring_expr(from: &[NodeId], to: &[NodeId]) -> GsExpr {
    let copies: Vec<usize> = from.iter().map(|n| to.iter().filter(|m| *m == n).count()).collect();
    let fan = ten_all(copies.iter().map(|c| match c {
        0 => GsExpr::Bang(1),
        c => dup_chain(*c),
    }));
    // Wire positions after fanning out: `start[p]` is where copies of from[p] begin.
    let mut start = Vec::with_capacity(from.len());
    let mut acc = 0;
    for c in &copies {
        start.push(acc);
        acc += c;
    }
    let width = acc;
    let mut used = alloc::vec![0usize; from.len()];
    let wanted: Vec<usize> = to
        .iter()
        .map(|n| {
            let p = from.iter().position(|m| m == n).expect("wiring target is available");
            used[p] += 1;
            start[p] + used[p] - 1
        })
        .collect();
    let mut arrangement: Vec<usize> = (0..width).collect();
    let mut swaps = Vec::new();
    for (pos, want) in wanted.iter().enumerate() {
        let at = arrangement.iter().position(|x| x == want).unwrap();
        for x in (pos..at).rev() {
            arrangement.swap(x, x + 1);
            swaps.push(ten_all([GsExpr::Id(x), GsExpr::Exch(1, 1), GsExpr::Id(width - x - 2)]));
        }
    }
    let mut parts = alloc::vec![fan];
    parts.extend(swaps);
    seq_all(parts, from.len())
}

/// `c` copies of one wire: right-nested duplications.
fn dup_chain(c: usize) -> GsExpr {
    if c == 1 {
        GsExpr::Id(1)
    } else {
        GsExpr::seq(GsExpr::Dup(1), ten_all([GsExpr::Id(1), dup_chain(c - 1)]))
    }
}

fn ten_all(parts: impl IntoIterator<Item = GsExpr>) -> GsExpr {
    let mut acc: Option<GsExpr> = None;
    for p in parts {
        acc = Some(match (acc, p) {
            (None, p) => p,
            (Some(GsExpr::Id(a)), GsExpr::Id(b)) => GsExpr::Id(a + b),
            (Some(a), GsExpr::Id(0)) => a,
            (Some(GsExpr::Id(0)), p) => p,
            (Some(GsExpr::Ten(a, b)), GsExpr::Id(c)) if matches!(*b, GsExpr::Id(_)) => {
                let GsExpr::Id(k) = *b else { unreachable!() };
                GsExpr::Ten(a, Box::new(GsExpr::Id(k + c)))
            }
            (Some(a), p) => GsExpr::ten(a, p),
        });
    }
    acc.unwrap_or(GsExpr::Id(0))
}

fn seq_all(parts: impl IntoIterator<Item = GsExpr>, width: usize) -> GsExpr {
    let mut acc: Option<GsExpr> = None;
    for p in parts {
        if matches!(p, GsExpr::Id(_)) {
            continue;
        }
        acc = Some(match acc {
            None => p,
            Some(a) => GsExpr::seq(a, p),
        });
    }
    acc.unwrap_or(GsExpr::Id(width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::iso;
    use alloc::string::ToString;
    use alloc::vec;

    fn sig() -> Signature {
        Signature::new([("add", 2), ("sub", 2), ("mul", 2), ("neg", 1), ("const_1", 0)]).unwrap()
    }

    #[test]
    fn constants_have_specified_outputs() {
        assert_eq!(exchange(2, 1).outputs(), &[NodeId::Input(2), NodeId::Input(0), NodeId::Input(1)]);
        assert_eq!(dup(1).outputs(), &[NodeId::Input(0), NodeId::Input(0)]);
        assert_eq!(bang(3).interface(), (3, 0));
        assert_eq!(identity(2).outputs(), &[NodeId::Input(0), NodeId::Input(1)]);
    }

    #[test]
    fn bottom_is_term_graph_only_without_outputs() {
        assert!(TermGraph::new(bottom(2, 0)).is_ok());
        assert!(TermGraph::new(bottom(2, 1)).is_err());
        assert!(iso(&bottom(1, 0), &bang(1)).is_some());
    }

    #[test]
    fn prim_consumes_inputs_in_order() {
        let p = prim(&sig(), "sub").unwrap();
        assert_eq!(p.interface(), (2, 1));
        let (_, e) = p.edges().next().unwrap();
        assert_eq!(e.ins, vec![NodeId::Input(0), NodeId::Input(1)]);
        assert_eq!(prim(&sig(), "div"), Err(AlgebraError::UnknownLabel("div".into())));
    }

    #[test]
    fn seq_rejects_mismatched_interfaces() {
        assert_eq!(
            seq(&identity(2), &identity(3)),
            Err(AlgebraError::InterfaceMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn seq_unit_law() {
        assert!(iso(&seq(&identity(3), &identity(3)).unwrap(), &identity(3)).is_some());
    }

    #[test]
    fn add_then_dup_shares_one_node() {
        let g = seq(&prim(&sig(), "add").unwrap(), &dup(1)).unwrap();
        assert_eq!(g.interface(), (2, 2));
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.outputs()[0], g.outputs()[1]);
        assert!(!g.outputs()[0].is_input());
    }

    #[test]
    fn ten_with_empty_is_unit() {
        let p = prim(&sig(), "add").unwrap();
        assert!(iso(&ten(&identity(0), &p), &p).is_some());
        assert!(iso(&ten(&p, &identity(0)), &p).is_some());
        let q = ten(&p, &identity(1));
        assert_eq!(q.interface(), (3, 2));
        assert_eq!(q.edge_count(), 1);
    }

    #[test]
    fn display_respects_precedence() {
        let e = GsExpr::seq(
            GsExpr::ten(GsExpr::prim("add"), GsExpr::Id(1)),
            GsExpr::seq(GsExpr::Dup(1), GsExpr::Exch(1, 1)),
        );
        assert_eq!(e.to_string(), "prim:add * id:1 ; (dup:1 ; exch:1,1)");
        let t = GsExpr::ten(GsExpr::Bang(1), GsExpr::seq(GsExpr::Id(1), GsExpr::Id(1)));
        assert_eq!(t.to_string(), "bang:1 * (id:1 ; id:1)");
    }

    #[test]
    fn ill_typed_expression_rejected() {
        let e = GsExpr::seq(GsExpr::Dup(1), GsExpr::Id(3));
        assert_eq!(build(&sig(), &e), Err(AlgebraError::InterfaceMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn identity_decomposes_to_id() {
        assert_eq!(to_expression(&identity(3)), GsExpr::Id(3));
        assert_eq!(to_expression(&identity(0)), GsExpr::Id(0));
    }

    #[test]
    fn wiring_round_trips() {
        for g in [exchange(2, 1), dup(2), bang(2), exchange(1, 2)] {
            let e = to_expression(&g);
            assert_eq!(e.prim_count(), 0);
            let back = build(&sig(), &e).unwrap();
            assert!(iso(&back, &g).is_some(), "{e}");
        }
    }

    #[test]
    fn shared_and_garbage_round_trip() {
        // (x + y, x + y) with a garbage neg(y)
        let s = sig();
        let body = seq(&prim(&s, "add").unwrap(), &dup(1)).unwrap();
        let garbage = seq(&prim(&s, "neg").unwrap(), &bang(1)).unwrap();
        let g = seq(&dup(2), &ten(&body, &ten(&bang(1), &garbage))).unwrap();
        let t = TermGraph::new(g).unwrap();
        let e = to_expression(&t);
        assert_eq!(e.prim_count(), 2);
        assert!(iso(&build(&s, &e).unwrap(), &t).is_some(), "{e}");
    }
}
