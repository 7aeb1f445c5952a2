//! Matchings (label- and incidence-preserving maps) and homomorphisms
//! (matchings that also fix inputs and preserve `gOut`), enumeration of the
//! matchings of a rule left-hand side, and the dangling condition.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graph::{Dhg, EdgeId, NodeId, TermGraph};

/// The three matching equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equation {
    /// `eOut₂ ∘ Φ_E = Φ_N ∘ eOut₁`
    EdgeOutput,
    /// `eLabel₂ ∘ Φ_E = eLabel₁`
    EdgeLabel,
    /// `eIn₂ ∘ Φ_E = map Φ_N ∘ eIn₁`
    EdgeInputs,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::EdgeOutput => "eOut",
            Equation::EdgeLabel => "eLabel",
            Equation::EdgeInputs => "eIn",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("node {0} of the source is not mapped")]
    UnmappedNode(NodeId),
    #[error("edge {0} of the source is not mapped")]
    UnmappedEdge(EdgeId),
    #[error("node {0} is mapped outside the target")]
    NodeOutsideTarget(NodeId),
    #[error("edge {0} is mapped outside the target")]
    EdgeOutsideTarget(EdgeId),
    #[error("equation {equation} violated at edge {edge}")]
    EquationViolated { equation: Equation, edge: EdgeId },
    #[error("homomorphism between graphs with interfaces {src:?} and {trg:?}")]
    InterfaceMismatch { src: (usize, usize), trg: (usize, usize) },
    #[error("input {0} is not fixed")]
    InputNotFixed(usize),
    #[error("graph output {0} is not preserved")]
    OutputNotPreserved(usize),
    #[error("matching does not belong to the given graphs")]
    Stale,
}

/// A DHG matching, remembering fingerprints of its source and target so
/// that it cannot be applied to other graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    src: u64,
    trg: u64,
    nodes: BTreeMap<NodeId, NodeId>,
    edges: BTreeMap<EdgeId, EdgeId>,
}

/// Verifies totality and the three matching equations pointwise.
pub fn check_matching(
    src: &Dhg,
    trg: &Dhg,
    nodes: BTreeMap<NodeId, NodeId>,
    edges: BTreeMap<EdgeId, EdgeId>,
) -> Result<Matching, MatchingError> {
    for n in src.nodes() {
        match nodes.get(&n) {
            None => return Err(MatchingError::UnmappedNode(n)),
            Some(m) if !trg.has_node(*m) => return Err(MatchingError::NodeOutsideTarget(n)),
            Some(_) => {}
        }
    }
    for (id, e) in src.edges() {
        let Some(img) = edges.get(&id) else { return Err(MatchingError::UnmappedEdge(id)) };
        let Some(e2) = trg.edge(*img) else { return Err(MatchingError::EdgeOutsideTarget(id)) };
        if e2.label != e.label {
            return Err(MatchingError::EquationViolated { equation: Equation::EdgeLabel, edge: id });
        }
        if NodeId::Inner(e2.out) != nodes[&NodeId::Inner(e.out)] {
            return Err(MatchingError::EquationViolated { equation: Equation::EdgeOutput, edge: id });
        }
        if e2.ins.len() != e.ins.len() || e.ins.iter().zip(&e2.ins).any(|(a, b)| nodes[a] != *b) {
            return Err(MatchingError::EquationViolated { equation: Equation::EdgeInputs, edge: id });
        }
    }
    let nodes = nodes.into_iter().filter(|(n, _)| src.has_node(*n)).collect();
    let edges = edges.into_iter().filter(|(e, _)| src.has_edge(*e)).collect();
    Ok(Matching { src: src.fingerprint(), trg: trg.fingerprint(), nodes, edges })
}

impl Matching {
    pub fn identity(g: &Dhg) -> Matching {
        let fp = g.fingerprint();
        Matching {
            src: fp,
            trg: fp,
            nodes: g.nodes().map(|n| (n, n)).collect(),
            edges: g.edge_ids().map(|e| (e, e)).collect(),
        }
    }

    pub fn node(&self, n: NodeId) -> NodeId {
        self.nodes[&n]
    }

    pub fn edge(&self, e: EdgeId) -> EdgeId {
        self.edges[&e]
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<EdgeId, EdgeId> {
        &self.edges
    }

    pub fn is_injective(&self) -> bool {
        is_injective(self)
    }

    /// Fails with [`MatchingError::Stale`] unless `src` and `trg` are the
    /// graphs this matching was built for.
    pub fn check_endpoints(&self, src: &Dhg, trg: &Dhg) -> Result<(), MatchingError> {
        if self.src == src.fingerprint() && self.trg == trg.fingerprint() {
            Ok(())
        } else {
            Err(MatchingError::Stale)
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Matching) -> Result<Matching, MatchingError> {
        if self.trg != next.src {
            return Err(MatchingError::Stale);
        }
        Ok(Matching {
            src: self.src,
            trg: next.trg,
            nodes: self.nodes.iter().map(|(a, b)| (*a, next.nodes[b])).collect(),
            edges: self.edges.iter().map(|(a, b)| (*a, next.edges[b])).collect(),
        })
    }

    pub fn node_image(&self) -> BTreeSet<NodeId> {
        self.nodes.values().copied().collect()
    }

    pub fn edge_image(&self) -> BTreeSet<EdgeId> {
        self.edges.values().copied().collect()
    }
}

pub fn is_injective(m: &Matching) -> bool {
    m.node_image().len() == m.nodes.len() && m.edge_image().len() == m.edges.len()
}

/// A matching between graphs of equal interface that fixes every input and
/// preserves `gOut`. Inner nodes may map to input nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homomorphism(Matching);

pub fn check_homomorphism(
    src: &Dhg,
    trg: &Dhg,
    nodes: BTreeMap<NodeId, NodeId>,
    edges: BTreeMap<EdgeId, EdgeId>,
) -> Result<Homomorphism, MatchingError> {
    Homomorphism::from_matching(check_matching(src, trg, nodes, edges)?, src, trg)
}

impl Homomorphism {
    pub fn from_matching(m: Matching, src: &Dhg, trg: &Dhg) -> Result<Homomorphism, MatchingError> {
        m.check_endpoints(src, trg)?;
        if src.interface() != trg.interface() {
            return Err(MatchingError::InterfaceMismatch { src: src.interface(), trg: trg.interface() });
        }
        for i in 0..src.inputs() {
            if m.node(NodeId::Input(i)) != NodeId::Input(i) {
                return Err(MatchingError::InputNotFixed(i));
            }
        }
        for (q, (a, b)) in src.outputs().iter().zip(trg.outputs()).enumerate() {
            if m.node(*a) != *b {
                return Err(MatchingError::OutputNotPreserved(q));
            }
        }
        Ok(Homomorphism(m))
    }

    pub fn matching(&self) -> &Matching {
        &self.0
    }

    pub fn into_matching(self) -> Matching {
        self.0
    }

    pub fn then(&self, next: &Homomorphism) -> Result<Homomorphism, MatchingError> {
        Ok(Homomorphism(self.0.then(&next.0)?))
    }

    pub fn is_injective(&self) -> bool {
        self.0.is_injective()
    }
}

impl core::ops::Deref for Homomorphism {
    type Target = Matching;

    fn deref(&self) -> &Matching {
        &self.0
    }
}

/// All matchings `l → a` (only injective ones if `injective`), ordered
/// lexicographically by the images of `l`'s edges in dependency order, then
/// by the images of untouched nodes.
pub fn find_matchings(l: &TermGraph, a: &Dhg, injective: bool) -> Vec<Matching> {
    let mut by_label: BTreeMap<&str, Vec<EdgeId>> = BTreeMap::new();
    for (id, e) in a.edges() {
        by_label.entry(e.label.as_str()).or_default().push(id);
    }
    let touched: BTreeSet<NodeId> = l
        .edges()
        .flat_map(|(_, e)| e.ins.iter().copied().chain(core::iter::once(NodeId::Inner(e.out))))
        .collect();
    let search = MatchSearch {
        l,
        a,
        injective,
        by_label,
        free: l.nodes().filter(|n| !touched.contains(n)).collect(),
        a_nodes: a.nodes().collect(),
        fps: (l.fingerprint(), a.fingerprint()),
    };
    let mut found = Vec::new();
    search.edges_from(0, Partial::default(), &mut found);
    found
}

#[derive(Clone, Default)]
struct Partial {
    nodes: BTreeMap<NodeId, NodeId>,
    used_nodes: BTreeSet<NodeId>,
    edges: BTreeMap<EdgeId, EdgeId>,
    used_edges: BTreeSet<EdgeId>,
}

impl Partial {
    fn bind(&mut self, x: NodeId, y: NodeId, injective: bool) -> bool {
        if let Some(prev) = self.nodes.get(&x) {
            return *prev == y;
        }
        if injective && self.used_nodes.contains(&y) {
            return false;
        }
        self.nodes.insert(x, y);
        self.used_nodes.insert(y);
        true
    }
}

struct MatchSearch<'a> {
    l: &'a TermGraph,
    a: &'a Dhg,
    injective: bool,
    by_label: BTreeMap<&'a str, Vec<EdgeId>>,
    free: Vec<NodeId>,
    a_nodes: Vec<NodeId>,
    fps: (u64, u64),
}

impl MatchSearch<'_> {
    fn edges_from(&self, k: usize, partial: Partial, found: &mut Vec<Matching>) {
        let order = self.l.topological_order();
        let Some(&e) = order.get(k) else {
            return self.free_from(0, partial, found);
        };
        let edge = self.l.edge(e).unwrap();
        for &cand in self.by_label.get(edge.label.as_str()).into_iter().flatten() {
            if self.injective && partial.used_edges.contains(&cand) {
                continue;
            }
            let ce = self.a.edge(cand).unwrap();
            if ce.ins.len() != edge.ins.len() {
                continue;
            }
            let mut next = partial.clone();
            let ok = edge.ins.iter().zip(&ce.ins).all(|(x, y)| next.bind(*x, *y, self.injective))
                && next.bind(NodeId::Inner(edge.out), NodeId::Inner(ce.out), self.injective);
            if ok {
                next.edges.insert(e, cand);
                next.used_edges.insert(cand);
                self.edges_from(k + 1, next, found);
            }
        }
    }

    fn free_from(&self, k: usize, partial: Partial, found: &mut Vec<Matching>) {
        let Some(&n) = self.free.get(k) else {
            found.push(Matching { src: self.fps.0, trg: self.fps.1, nodes: partial.nodes, edges: partial.edges });
            return;
        };
        for &target in &self.a_nodes {
            let mut next = partial.clone();
            if next.bind(n, target, self.injective) {
                self.free_from(k + 1, next, found);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DanglingConflict {
    /// A surviving edge of the application graph uses a node that would be deleted.
    EdgeTouchesDeleted { edge: EdgeId, node: NodeId },
    /// A graph output of the application graph would be deleted.
    OutputIsDeleted { position: usize, node: NodeId },
}

impl fmt::Display for DanglingConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DanglingConflict::EdgeTouchesDeleted { edge, node } => {
                write!(f, "edge {edge} outside the match uses deleted node {node}")
            }
            DanglingConflict::OutputIsDeleted { position, node } => {
                write!(f, "graph output {position} is deleted node {node}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DanglingReport {
    pub deleted_nodes: BTreeSet<NodeId>,
    pub deleted_edges: BTreeSet<EdgeId>,
    pub conflicts: Vec<DanglingConflict>,
}

impl DanglingReport {
    pub fn ok(&self) -> bool {
        self.conflicts.is_empty()
    }
}

/// The dangling condition for deleting the part of `l` outside the image of
/// `phi : G → L` from `a` along `m1 : L → A`.
///
/// Deleted are the `m1`-images of `l`'s inner nodes and edges that have no
/// `phi`-preimage. The condition fails if a surviving edge or graph output
/// of `a` refers to a deleted node.
pub fn dangling_ok(phi: &Homomorphism, l: &Dhg, a: &Dhg, m1: &Matching) -> DanglingReport {
    let kept_nodes = phi.node_image();
    let kept_edges = phi.edge_image();
    // Under a non-injective match an image shared with a kept item survives.
    let kept_node_images: BTreeSet<NodeId> = kept_nodes.iter().map(|n| m1.node(*n)).collect();
    let kept_edge_images: BTreeSet<EdgeId> = kept_edges.iter().map(|e| m1.edge(*e)).collect();
    let deleted_nodes: BTreeSet<NodeId> = l
        .inner_nodes()
        .map(NodeId::Inner)
        .filter(|n| !kept_nodes.contains(n))
        .map(|n| m1.node(n))
        .filter(|n| !kept_node_images.contains(n))
        .collect();
    let deleted_edges: BTreeSet<EdgeId> = l
        .edge_ids()
        .filter(|e| !kept_edges.contains(e))
        .map(|e| m1.edge(e))
        .filter(|e| !kept_edge_images.contains(e))
        .collect();
    let mut conflicts = Vec::new();
    for (id, e) in a.edges() {
        if deleted_edges.contains(&id) {
            continue;
        }
        let touched = e.ins.iter().copied().chain(core::iter::once(NodeId::Inner(e.out)));
        let mut seen = BTreeSet::new();
        for n in touched {
            if deleted_nodes.contains(&n) && seen.insert(n) {
                conflicts.push(DanglingConflict::EdgeTouchesDeleted { edge: id, node: n });
            }
        }
    }
    for (q, n) in a.outputs().iter().enumerate() {
        if deleted_nodes.contains(n) {
            conflicts.push(DanglingConflict::OutputIsDeleted { position: q, node: *n });
        }
    }
    DanglingReport { deleted_nodes, deleted_edges, conflicts }
}
