//! Directed hypergraphs with an input/output interface, and the term graph
//! (jungle) refinement.
//!
//! A [`Dhg`] with `m` inputs and `n` outputs has nodes `Fin m ⊎ inner`. Every
//! hyperedge carries a label, exactly one output node (always inner) and an
//! ordered list of input nodes whose length is the arity of its label. The
//! graph output map `gOut : Fin n → nodes` is an arbitrary function.
//!
//! A [`TermGraph`] is a `Dhg` in which every inner node has exactly one
//! defining edge and the edge dependency relation is acyclic.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::hash::{Hash, Hasher};
use core::ops::Deref;

use thiserror::Error;

/// Edge labels together with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    labels: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("label `{0}` declared more than once")]
    DuplicateLabel(String),
}

impl Signature {
    pub fn new<I, S>(labels: I) -> Result<Self, SignatureError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut sig = Signature::default();
        for (name, arity) in labels {
            sig.declare(name, arity)?;
        }
        Ok(sig)
    }

    pub fn declare(&mut self, name: impl Into<String>, arity: usize) -> Result<(), SignatureError> {
        let name = name.into();
        if self.labels.contains_key(&name) {
            return Err(SignatureError::DuplicateLabel(name));
        }
        self.labels.insert(name, arity);
        Ok(())
    }

    pub fn arity(&self, label: &str) -> Option<usize> {
        self.labels.get(label).copied()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains_key(label)
    }

    /// Labels in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.labels.iter().map(|(l, a)| (l.as_str(), *a))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Identifier of an inner node. Opaque and local to one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InnerId(pub u32);

/// Identifier of a hyperedge. Opaque and local to one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

/// A node is either one of the `m` graph inputs or an inner node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Input(usize),
    Inner(InnerId),
}

impl NodeId {
    pub fn inner(id: u32) -> Self {
        NodeId::Inner(InnerId(id))
    }

    pub fn as_inner(self) -> Option<InnerId> {
        match self {
            NodeId::Inner(id) => Some(id),
            NodeId::Input(_) => None,
        }
    }

    pub fn is_input(self) -> bool {
        matches!(self, NodeId::Input(_))
    }
}

impl From<InnerId> for NodeId {
    fn from(id: InnerId) -> Self {
        NodeId::Inner(id)
    }
}

impl fmt::Display for InnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Input(i) => write!(f, "in{i}"),
            NodeId::Inner(id) => id.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub label: String,
    pub out: InnerId,
    pub ins: Vec<NodeId>,
}

impl Edge {
    pub fn new(label: impl Into<String>, ins: Vec<NodeId>, out: InnerId) -> Self {
        Edge { label: label.into(), out, ins }
    }
}

/// Unvalidated graph data, as produced by a parser or by hand.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawGraph {
    pub inputs: usize,
    pub inner: Vec<InnerId>,
    pub edges: Vec<(EdgeId, Edge)>,
    pub outputs: Vec<NodeId>,
}

/// Where in a graph a node reference occurs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    EdgeOutput(EdgeId),
    EdgeInput(EdgeId, usize),
    GraphOutput(usize),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::EdgeOutput(e) => write!(f, "output of {e}"),
            Site::EdgeInput(e, p) => write!(f, "input {p} of {e}"),
            Site::GraphOutput(q) => write!(f, "graph output {q}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DhgError {
    #[error("edge {edge} has undeclared label `{label}`")]
    UnknownLabel { edge: EdgeId, label: String },
    #[error("edge {edge} labelled `{label}` has {found} inputs, arity is {expected}")]
    ArityMismatch { edge: EdgeId, label: String, expected: usize, found: usize },
    #[error("{site} refers to unknown node {node}")]
    DanglingReference { site: Site, node: NodeId },
    #[error("inner node {0} declared more than once")]
    DuplicateNode(InnerId),
    #[error("edge {0} declared more than once")]
    DuplicateEdge(EdgeId),
}

/// A directed hypergraph with `inputs` graph input nodes and an output list.
///
/// Immutable once built; every transformation produces a fresh graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dhg {
    inputs: usize,
    inner: BTreeSet<InnerId>,
    edges: BTreeMap<EdgeId, Edge>,
    outputs: Vec<NodeId>,
}

/// Checks every structural invariant of `raw` against `sig`, reporting all
/// violations rather than the first.
pub fn validate_dhg(sig: &Signature, raw: &RawGraph) -> Result<Dhg, Vec<DhgError>> {
    let mut errors = Vec::new();
    let mut inner = BTreeSet::new();
    for id in &raw.inner {
        if !inner.insert(*id) {
            errors.push(DhgError::DuplicateNode(*id));
        }
    }
    let exists = |n: NodeId| match n {
        NodeId::Input(i) => i < raw.inputs,
        NodeId::Inner(id) => inner.contains(&id),
    };
    let mut edges = BTreeMap::new();
    for (id, edge) in &raw.edges {
        if edges.contains_key(id) {
            errors.push(DhgError::DuplicateEdge(*id));
            continue;
        }
        match sig.arity(&edge.label) {
            None => errors.push(DhgError::UnknownLabel { edge: *id, label: edge.label.clone() }),
            Some(arity) if arity != edge.ins.len() => errors.push(DhgError::ArityMismatch {
                edge: *id,
                label: edge.label.clone(),
                expected: arity,
                found: edge.ins.len(),
            }),
            Some(_) => {}
        }
        if !inner.contains(&edge.out) {
            errors.push(DhgError::DanglingReference {
                site: Site::EdgeOutput(*id),
                node: NodeId::Inner(edge.out),
            });
        }
        for (p, n) in edge.ins.iter().enumerate() {
            if !exists(*n) {
                errors.push(DhgError::DanglingReference { site: Site::EdgeInput(*id, p), node: *n });
            }
        }
        edges.insert(*id, edge.clone());
    }
    for (q, n) in raw.outputs.iter().enumerate() {
        if !exists(*n) {
            errors.push(DhgError::DanglingReference { site: Site::GraphOutput(q), node: *n });
        }
    }
    if errors.is_empty() {
        Ok(Dhg { inputs: raw.inputs, inner, edges, outputs: raw.outputs.clone() })
    } else {
        Err(errors)
    }
}

impl Dhg {
    pub fn new(sig: &Signature, raw: &RawGraph) -> Result<Self, Vec<DhgError>> {
        validate_dhg(sig, raw)
    }

    /// Assembles a graph from parts already known to be consistent.
    pub(crate) fn from_parts(
        inputs: usize,
        inner: BTreeSet<InnerId>,
        edges: BTreeMap<EdgeId, Edge>,
        outputs: Vec<NodeId>,
    ) -> Self {
        let g = Dhg { inputs, inner, edges, outputs };
        debug_assert!(g.references_ok(), "inconsistent graph parts");
        g
    }

    fn references_ok(&self) -> bool {
        self.edges
            .values()
            .all(|e| self.inner.contains(&e.out) && e.ins.iter().all(|n| self.has_node(*n)))
            && self.outputs.iter().all(|n| self.has_node(*n))
    }

    /// The empty graph `0 → 0`.
    pub fn empty() -> Self {
        Dhg { inputs: 0, inner: BTreeSet::new(), edges: BTreeMap::new(), outputs: Vec::new() }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    /// `(m, n)`: number of inputs and outputs.
    pub fn interface(&self) -> (usize, usize) {
        (self.inputs, self.outputs.len())
    }

    pub fn inner_nodes(&self) -> impl Iterator<Item = InnerId> + '_ {
        self.inner.iter().copied()
    }

    /// All nodes, inputs first, then inner nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.inputs).map(NodeId::Input).chain(self.inner.iter().map(|i| NodeId::Inner(*i)))
    }

    pub fn node_count(&self) -> usize {
        self.inputs + self.inner.len()
    }

    pub fn inner_count(&self) -> usize {
        self.inner.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_node(&self, n: NodeId) -> bool {
        match n {
            NodeId::Input(i) => i < self.inputs,
            NodeId::Inner(id) => self.inner.contains(&id),
        }
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges.iter().map(|(id, e)| (*id, e))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    /// For each inner node, the edges having it as output (possibly none).
    pub fn defining_edges(&self) -> BTreeMap<InnerId, Vec<EdgeId>> {
        let mut defs: BTreeMap<InnerId, Vec<EdgeId>> =
            self.inner.iter().map(|n| (*n, Vec::new())).collect();
        for (id, e) in &self.edges {
            defs.entry(e.out).or_default().push(*id);
        }
        defs
    }

    /// For each node, the edges consuming it (one entry per tentacle).
    pub fn consumers(&self) -> BTreeMap<NodeId, Vec<EdgeId>> {
        let mut uses: BTreeMap<NodeId, Vec<EdgeId>> = BTreeMap::new();
        for (id, e) in &self.edges {
            for n in &e.ins {
                uses.entry(*n).or_default().push(*id);
            }
        }
        uses
    }

    pub fn next_inner_id(&self) -> u32 {
        self.inner.iter().next_back().map_or(0, |i| i.0 + 1)
    }

    pub fn next_edge_id(&self) -> u32 {
        self.edges.keys().next_back().map_or(0, |e| e.0 + 1)
    }

    /// Edges in a dependency-respecting order (producers before consumers),
    /// smallest id first among ready edges. On a cycle, returns the edges of
    /// one witness cycle instead.
    pub fn topological_edges(&self) -> Result<Vec<EdgeId>, Vec<EdgeId>> {
        let defs = self.defining_edges();
        let deps: BTreeMap<EdgeId, BTreeSet<EdgeId>> = self
            .edges
            .iter()
            .map(|(id, e)| {
                let d = e
                    .ins
                    .iter()
                    .filter_map(|n| n.as_inner())
                    .flat_map(|n| defs.get(&n).into_iter().flatten().copied())
                    .collect();
                (*id, d)
            })
            .collect();
        let mut dependants: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
        let mut pending: BTreeMap<EdgeId, usize> = BTreeMap::new();
        for (id, d) in &deps {
            pending.insert(*id, d.len());
            for p in d {
                dependants.entry(*p).or_default().push(*id);
            }
        }
        let mut ready: BTreeSet<EdgeId> =
            pending.iter().filter(|(_, c)| **c == 0).map(|(e, _)| *e).collect();
        let mut order = Vec::with_capacity(self.edges.len());
        while let Some(e) = ready.pop_first() {
            order.push(e);
            for d in dependants.get(&e).into_iter().flatten() {
                let c = pending.get_mut(d).expect("dependant is an edge");
                *c -= 1;
                if *c == 0 {
                    ready.insert(*d);
                }
            }
        }
        if order.len() == self.edges.len() {
            return Ok(order);
        }
        let done: BTreeSet<EdgeId> = order.into_iter().collect();
        Err(find_cycle(&deps, &done))
    }

    /// Nodes from which some graph output is reachable, following edges from
    /// their inputs to their output.
    pub fn live_nodes(&self) -> BTreeSet<NodeId> {
        let defs = self.defining_edges();
        let mut live = BTreeSet::new();
        let mut stack: Vec<NodeId> = self.outputs.clone();
        while let Some(n) = stack.pop() {
            if !live.insert(n) {
                continue;
            }
            if let NodeId::Inner(id) = n {
                for e in defs.get(&id).into_iter().flatten() {
                    stack.extend(self.edges[e].ins.iter().copied());
                }
            }
        }
        live
    }

    /// Content fingerprint; equal graphs have equal fingerprints.
    pub fn fingerprint(&self) -> u64 {
        let mut h = rustc_hash::FxHasher::default();
        self.hash(&mut h);
        h.finish()
    }
}

fn find_cycle(deps: &BTreeMap<EdgeId, BTreeSet<EdgeId>>, done: &BTreeSet<EdgeId>) -> Vec<EdgeId> {
    // Every remaining edge depends on some remaining edge, so walking
    // dependencies must revisit an edge.
    let start = *deps.keys().find(|e| !done.contains(e)).expect("cycle exists");
    let mut path = Vec::new();
    let mut seen = BTreeMap::new();
    let mut cur = start;
    loop {
        if let Some(&pos) = seen.get(&cur) {
            let mut cycle: Vec<EdgeId> = path[pos..].to_vec();
            cycle.reverse();
            return cycle;
        }
        seen.insert(cur, path.len());
        path.push(cur);
        cur = *deps[&cur].iter().find(|d| !done.contains(d)).expect("remaining edge has a remaining dependency");
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TermGraphError {
    #[error("inner node {0} has no defining edge")]
    NodeWithoutDefiningEdge(InnerId),
    #[error("inner node {node} has multiple defining edges {}", edge_list(edges))]
    NodeWithMultipleDefiningEdges { node: InnerId, edges: Vec<EdgeId> },
    #[error("cyclic dependency through edges {}", edge_list(.0))]
    CycleDetected(Vec<EdgeId>),
}

pub(crate) fn edge_list(edges: &[EdgeId]) -> String {
    edges.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

/// An acyclic [`Dhg`] whose edge-output map is a bijection onto the inner nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TermGraph {
    graph: Dhg,
    defining: BTreeMap<InnerId, EdgeId>,
    topo: Vec<EdgeId>,
}

pub fn as_term_graph(g: Dhg) -> Result<TermGraph, TermGraphError> {
    TermGraph::new(g)
}

impl TermGraph {
    pub fn new(graph: Dhg) -> Result<Self, TermGraphError> {
        let mut defining = BTreeMap::new();
        for (node, edges) in graph.defining_edges() {
            match edges.as_slice() {
                [] => return Err(TermGraphError::NodeWithoutDefiningEdge(node)),
                [e] => {
                    defining.insert(node, *e);
                }
                _ => return Err(TermGraphError::NodeWithMultipleDefiningEdges { node, edges }),
            }
        }
        let topo = graph.topological_edges().map_err(TermGraphError::CycleDetected)?;
        Ok(TermGraph { graph, defining, topo })
    }

    pub fn as_dhg(&self) -> &Dhg {
        &self.graph
    }

    pub fn into_dhg(self) -> Dhg {
        self.graph
    }

    /// The unique edge whose output is `node`.
    pub fn defining_edge(&self, node: InnerId) -> Option<EdgeId> {
        self.defining.get(&node).copied()
    }

    /// Edges with every producer before its consumers.
    pub fn topological_order(&self) -> &[EdgeId] {
        &self.topo
    }
}

impl Deref for TermGraph {
    type Target = Dhg;

    fn deref(&self) -> &Dhg {
        &self.graph
    }
}

impl TryFrom<Dhg> for TermGraph {
    type Error = TermGraphError;

    fn try_from(g: Dhg) -> Result<Self, Self::Error> {
        TermGraph::new(g)
    }
}

impl From<TermGraph> for Dhg {
    fn from(t: TermGraph) -> Dhg {
        t.graph
    }
}
