//! Interface-respecting isomorphism of directed hypergraphs.
//!
//! Search first propagates every assignment forced by the interface: inputs
//! are fixed pointwise, `gOut` pairs up output nodes, a node with a single
//! defining edge forces that edge, and an edge forces its output and ordered
//! inputs. Only what remains (garbage, and nodes with several defining edges)
//! is resolved by backtracking, taking edges in dependency order so that a
//! candidate's inputs are usually already pinned down.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::graph::{Dhg, EdgeId, InnerId, NodeId};

/// A pair of bijections that is a homomorphism in both directions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Isomorphism {
    pub nodes: BTreeMap<NodeId, NodeId>,
    pub edges: BTreeMap<EdgeId, EdgeId>,
}

impl Isomorphism {
    /// Independent check that `self` is an isomorphism from `g1` to `g2`.
    pub fn is_valid(&self, g1: &Dhg, g2: &Dhg) -> bool {
        if g1.interface() != g2.interface()
            || g1.node_count() != g2.node_count()
            || g1.edge_count() != g2.edge_count()
            || self.nodes.len() != g1.node_count()
            || self.edges.len() != g1.edge_count()
        {
            return false;
        }
        let node_img: BTreeSet<_> = self.nodes.values().collect();
        let edge_img: BTreeSet<_> = self.edges.values().collect();
        if node_img.len() != self.nodes.len() || edge_img.len() != self.edges.len() {
            return false;
        }
        if (0..g1.inputs()).any(|i| self.nodes.get(&NodeId::Input(i)) != Some(&NodeId::Input(i))) {
            return false;
        }
        if g1.nodes().any(|n| !self.nodes.get(&n).is_some_and(|m| g2.has_node(*m))) {
            return false;
        }
        let edges_ok = g1.edges().all(|(id, e)| {
            let Some(e2) = self.edges.get(&id).and_then(|i| g2.edge(*i)) else { return false };
            e2.label == e.label
                && NodeId::Inner(e2.out) == self.nodes[&NodeId::Inner(e.out)]
                && e2.ins.len() == e.ins.len()
                && e.ins.iter().zip(&e2.ins).all(|(a, b)| self.nodes[a] == *b)
        });
        edges_ok && g1.outputs().iter().zip(g2.outputs()).all(|(a, b)| self.nodes[a] == *b)
    }

    pub fn inverse(&self) -> Isomorphism {
        Isomorphism {
            nodes: self.nodes.iter().map(|(a, b)| (*b, *a)).collect(),
            edges: self.edges.iter().map(|(a, b)| (*b, *a)).collect(),
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Isomorphism) -> Isomorphism {
        Isomorphism {
            nodes: self.nodes.iter().map(|(a, b)| (*a, next.nodes[b])).collect(),
            edges: self.edges.iter().map(|(a, b)| (*a, next.edges[b])).collect(),
        }
    }
}

/// Finds an isomorphism `g1 ≅ g2` fixing input indices and preserving `gOut`.
pub fn iso(g1: &Dhg, g2: &Dhg) -> Option<Isomorphism> {
    iso_seeded(g1, g2, &BTreeMap::new(), &BTreeMap::new())
}

/// As [`iso`], restricted to isomorphisms extending the given partial maps.
pub fn iso_seeded(
    g1: &Dhg,
    g2: &Dhg,
    seed_nodes: &BTreeMap<NodeId, NodeId>,
    seed_edges: &BTreeMap<EdgeId, EdgeId>,
) -> Option<Isomorphism> {
    if g1.interface() != g2.interface()
        || g1.inner_count() != g2.inner_count()
        || g1.edge_count() != g2.edge_count()
        || label_counts(g1) != label_counts(g2)
    {
        return None;
    }
    let search = Search::new(g1, g2);
    let mut state = State::default();
    let mut queue = Vec::new();
    for i in 0..g1.inputs() {
        if !state.node(NodeId::Input(i), NodeId::Input(i), &mut queue) {
            return None;
        }
    }
    for (a, b) in g1.outputs().iter().zip(g2.outputs()) {
        if !state.node(*a, *b, &mut queue) {
            return None;
        }
    }
    for (a, b) in seed_nodes {
        if !g1.has_node(*a) || !g2.has_node(*b) || !state.node(*a, *b, &mut queue) {
            return None;
        }
    }
    for (a, b) in seed_edges {
        if !g1.has_edge(*a) || !g2.has_edge(*b) || !state.edge(*a, *b, &mut queue) {
            return None;
        }
    }
    if !search.propagate(&mut state, queue) {
        return None;
    }
    search.run(state).map(|s| Isomorphism { nodes: s.nodes, edges: s.edges })
}

fn label_counts(g: &Dhg) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for (_, e) in g.edges() {
        *m.entry(e.label.as_str()).or_insert(0) += 1;
    }
    m
}

#[derive(Clone, Default)]
struct State {
    nodes: BTreeMap<NodeId, NodeId>,
    nodes_rev: BTreeMap<NodeId, NodeId>,
    edges: BTreeMap<EdgeId, EdgeId>,
    edges_rev: BTreeMap<EdgeId, EdgeId>,
}

enum Pair {
    Node(NodeId, NodeId),
    Edge(EdgeId, EdgeId),
}

impl State {
    fn node(&mut self, a: NodeId, b: NodeId, queue: &mut Vec<Pair>) -> bool {
        match (a, b) {
            (NodeId::Input(x), NodeId::Input(y)) if x != y => return false,
            (NodeId::Input(_), NodeId::Inner(_)) | (NodeId::Inner(_), NodeId::Input(_)) => return false,
            _ => {}
        }
        if let Some(prev) = self.nodes.get(&a) {
            return *prev == b;
        }
        if self.nodes_rev.contains_key(&b) {
            return false;
        }
        self.nodes.insert(a, b);
        self.nodes_rev.insert(b, a);
        queue.push(Pair::Node(a, b));
        true
    }

    fn edge(&mut self, a: EdgeId, b: EdgeId, queue: &mut Vec<Pair>) -> bool {
        if let Some(prev) = self.edges.get(&a) {
            return *prev == b;
        }
        if self.edges_rev.contains_key(&b) {
            return false;
        }
        self.edges.insert(a, b);
        self.edges_rev.insert(b, a);
        queue.push(Pair::Edge(a, b));
        true
    }
}

struct Search<'a> {
    g1: &'a Dhg,
    g2: &'a Dhg,
    defs1: BTreeMap<InnerId, Vec<EdgeId>>,
    defs2: BTreeMap<InnerId, Vec<EdgeId>>,
    order: Vec<EdgeId>,
}

impl<'a> Search<'a> {
    fn new(g1: &'a Dhg, g2: &'a Dhg) -> Self {
        let order = g1.topological_edges().unwrap_or_else(|_| g1.edge_ids().collect());
        Search { g1, g2, defs1: g1.defining_edges(), defs2: g2.defining_edges(), order }
    }

    fn propagate(&self, state: &mut State, mut queue: Vec<Pair>) -> bool {
        while let Some(p) = queue.pop() {
            match p {
                Pair::Node(NodeId::Inner(a), NodeId::Inner(b)) => {
                    let (da, db) = (&self.defs1[&a], &self.defs2[&b]);
                    if da.len() != db.len() {
                        return false;
                    }
                    if let ([ea], [eb]) = (da.as_slice(), db.as_slice()) {
                        if !state.edge(*ea, *eb, &mut queue) {
                            return false;
                        }
                    }
                }
                Pair::Node(..) => {}
                Pair::Edge(a, b) => {
                    let (ea, eb) = (&self.g1.edge(a).unwrap(), &self.g2.edge(b).unwrap());
                    if ea.label != eb.label || ea.ins.len() != eb.ins.len() {
                        return false;
                    }
                    if !state.node(ea.out.into(), eb.out.into(), &mut queue) {
                        return false;
                    }
                    for (x, y) in ea.ins.iter().zip(&eb.ins) {
                        if !state.node(*x, *y, &mut queue) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn run(&self, state: State) -> Option<State> {
        let Some(&next) = self.order.iter().find(|e| !state.edges.contains_key(e)) else {
            return self.finish(state);
        };
        let edge = self.g1.edge(next).unwrap();
        for (cand, ce) in self.g2.edges() {
            if state.edges_rev.contains_key(&cand) || ce.label != edge.label {
                continue;
            }
            let mut branch = state.clone();
            let mut queue = Vec::new();
            if branch.edge(next, cand, &mut queue) && self.propagate(&mut branch, queue) {
                if let Some(done) = self.run(branch) {
                    return Some(done);
                }
            }
        }
        None
    }

    /// Pairs up the isolated inner nodes left after all edges are mapped.
    fn finish(&self, mut state: State) -> Option<State> {
        let left: Vec<NodeId> = self.g1.nodes().filter(|n| !state.nodes.contains_key(n)).collect();
        let right: Vec<NodeId> = self.g2.nodes().filter(|n| !state.nodes_rev.contains_key(n)).collect();
        if left.len() != right.len() {
            return None;
        }
        let mut queue = Vec::new();
        for (a, b) in left.into_iter().zip(right) {
            if !state.node(a, b, &mut queue) {
                return None;
            }
        }
        // Isolated nodes have no defining edges on either side.
        self.propagate(&mut state, queue).then_some(state)
    }
}
