//! Rules as spans `L ← ⊥_{i,j} → R`, the pushout complement and pushout in
//! the category of DHG matchings, and the checked rewrite step.
//!
//! ```text
//!   L  <--Φ--  G  --Ψ-->  R
//!   |M1        |Χ         |M2
//!   v          v          v
//!   A  <--Ξ--  H  --Ω-->  B
//! ```
//!
//! With `Φ` injective (a solid left-hand side), `M1` injective and the
//! dangling condition satisfied, `B` is always a term graph. The rewrite
//! re-checks this anyway; with validations bypassed the same check reports
//! the failures that the side conditions exist to prevent.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::algebra::bottom;
use crate::graph::{edge_list, Dhg, Edge, EdgeId, InnerId, NodeId, TermGraph, TermGraphError};
use crate::matching::{
    check_homomorphism, check_matching, dangling_ok, DanglingReport, Homomorphism, Matching,
    MatchingError,
};
use crate::unionfind::UnionFind;

/// Why `Φ : ⊥ → L` fails to be injective.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolidityViolation {
    #[error("output {position} of the left-hand side is input node {node}")]
    OutputIsInput { position: usize, node: NodeId },
    #[error("outputs {first} and {second} of the left-hand side are the same node")]
    SharedOutput { first: usize, second: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("left-hand side is {lhs:?} but right-hand side is {rhs:?}")]
    InterfaceMismatch { lhs: (usize, usize), rhs: (usize, usize) },
    #[error("left-hand side is not solid: {0}")]
    LhsNotSolid(SolidityViolation),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DpoError {
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("the match is not injective")]
    NotInjectiveMatch,
    #[error("left-hand side is not solid: {0}")]
    LhsNotSolid(SolidityViolation),
    #[error("dangling condition violated ({} conflicts)", .0.conflicts.len())]
    DanglingConflict(DanglingReport),
    #[error("pushout identifies distinct inputs {0} and {1}")]
    PushoutMergesInputs(usize, usize),
    #[error("ResultNotTermGraph: {0}")]
    ResultNotTermGraph(TermGraphError),
    /// The glued graph has a cycle. Possible at non-convex matches, where a
    /// path leaves the image of `L` and re-enters it.
    #[error("rewrite creates a cycle through {}", edge_list(.0))]
    CycleCreated(Vec<EdgeId>),
    #[error("internal soundness failure: validated rewrite produced a non-term graph: {0}")]
    Unsound(TermGraphError),
    #[error("internal soundness failure: {0} square does not commute")]
    SquareViolated(&'static str),
}

/// A rewrite rule `L ← ⊥_{i,j} → R` with both legs stored for auditing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    lhs: TermGraph,
    rhs: TermGraph,
    gluing: Dhg,
    phi: Homomorphism,
    psi: Homomorphism,
}

/// Builds a rule, rejecting left-hand sides that are not solid.
pub fn make_rule(lhs: TermGraph, rhs: TermGraph) -> Result<Rule, RuleError> {
    Rule::new(lhs, rhs)
}

impl Rule {
    pub fn new(lhs: TermGraph, rhs: TermGraph) -> Result<Rule, RuleError> {
        let rule = Rule::new_unchecked(lhs, rhs)?;
        if let Some(v) = rule.solidity_violation() {
            return Err(RuleError::LhsNotSolid(v));
        }
        Ok(rule)
    }

    /// Builds the span without requiring `Φ` to be injective. Such rules can
    /// only be applied with validations bypassed.
    pub fn new_unchecked(lhs: TermGraph, rhs: TermGraph) -> Result<Rule, RuleError> {
        if lhs.interface() != rhs.interface() {
            return Err(RuleError::InterfaceMismatch { lhs: lhs.interface(), rhs: rhs.interface() });
        }
        let (i, j) = lhs.interface();
        let gluing = bottom(i, j);
        let phi = interface_homomorphism(&gluing, &lhs);
        let psi = interface_homomorphism(&gluing, &rhs);
        Ok(Rule { lhs, rhs, gluing, phi, psi })
    }

    pub fn lhs(&self) -> &TermGraph {
        &self.lhs
    }

    pub fn rhs(&self) -> &TermGraph {
        &self.rhs
    }

    /// The gluing graph `⊥_{i,j}`.
    pub fn gluing(&self) -> &Dhg {
        &self.gluing
    }

    pub fn phi(&self) -> &Homomorphism {
        &self.phi
    }

    pub fn psi(&self) -> &Homomorphism {
        &self.psi
    }

    pub fn interface(&self) -> (usize, usize) {
        self.lhs.interface()
    }

    pub fn is_solid(&self) -> bool {
        self.phi.is_injective()
    }

    pub fn solidity_violation(&self) -> Option<SolidityViolation> {
        let outs = self.lhs.outputs();
        for (q, n) in outs.iter().enumerate() {
            if n.is_input() {
                return Some(SolidityViolation::OutputIsInput { position: q, node: *n });
            }
            if let Some(first) = outs[..q].iter().position(|m| m == n) {
                return Some(SolidityViolation::SharedOutput { first, second: q });
            }
        }
        debug_assert!(self.is_solid());
        None
    }
}

/// The unique homomorphism `⊥_{i,j} → target`.
fn interface_homomorphism(gluing: &Dhg, target: &Dhg) -> Homomorphism {
    let nodes = gluing
        .nodes()
        .map(|n| match n {
            NodeId::Input(p) => (n, NodeId::Input(p)),
            NodeId::Inner(q) => (n, target.outputs()[q.0 as usize]),
        })
        .collect();
    check_homomorphism(gluing, target, nodes, BTreeMap::new()).expect("⊥ is initial among equal interfaces")
}

/// The left square: host graph `H` with `Χ : G → H` and the inclusion `Ξ : H → A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complement {
    pub host: Dhg,
    pub chi: Matching,
    pub xi: Homomorphism,
}

/// The right square: result `B` with `M2 : R → B` and `Ω : H → B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pushout {
    pub result: Dhg,
    pub m2: Matching,
    pub omega: Homomorphism,
}

/// Pushout complement of `Φ` and `M1` for a rule, checking injectivity of
/// `M1` and the dangling condition.
pub fn pushout_complement(rule: &Rule, a: &Dhg, m1: &Matching) -> Result<Complement, DpoError> {
    m1.check_endpoints(&rule.lhs, a)?;
    if !m1.is_injective() {
        return Err(DpoError::NotInjectiveMatch);
    }
    pushout_complement_along(&rule.phi, &rule.gluing, &rule.lhs, a, m1)
}

/// Pushout complement for an arbitrary gluing homomorphism `phi : g → l`.
///
/// Deletes from `a` the images of `l`'s edges and inner nodes outside the
/// image of `phi`; fails when that would leave a dangling reference. General
/// gluing graphs are experimental: rules only use `⊥_{i,j}`.
pub fn pushout_complement_along(
    phi: &Homomorphism,
    g: &Dhg,
    l: &Dhg,
    a: &Dhg,
    m1: &Matching,
) -> Result<Complement, DpoError> {
    phi.check_endpoints(g, l)?;
    m1.check_endpoints(l, a)?;
    let report = dangling_ok(phi, l, a, m1);
    if !report.ok() {
        return Err(DpoError::DanglingConflict(report));
    }
    let inner = a
        .inner_nodes()
        .filter(|n| !report.deleted_nodes.contains(&NodeId::Inner(*n)))
        .collect();
    let edges: BTreeMap<EdgeId, Edge> = a
        .edges()
        .filter(|(id, _)| !report.deleted_edges.contains(id))
        .map(|(id, e)| (id, e.clone()))
        .collect();
    let host = Dhg::from_parts(a.inputs(), inner, edges, a.outputs().to_vec());
    let through = phi.matching().then(m1)?;
    let chi = check_matching(g, &host, through.nodes().clone(), through.edges().clone())?;
    let inclusion = Matching::identity(&host);
    let xi = check_homomorphism(&host, a, inclusion.nodes().clone(), inclusion.edges().clone())?;
    Ok(Complement { host, chi, xi })
}

/// Pushout of `Ψ` and `Χ` for a rule.
pub fn pushout(rule: &Rule, host: &Dhg, chi: &Matching) -> Result<Pushout, DpoError> {
    pushout_along(&rule.psi, &rule.gluing, &rule.rhs, host, chi)
}

/// Pushout of `psi : g → r` and `chi : g → host` in the category of DHG
/// matchings, realized as a union-find quotient of `host ⊎ r`.
///
/// Each class is represented by a host node when it has one, so `Ω` is the
/// identity on every host node that is not identified with another.
pub fn pushout_along(
    psi: &Homomorphism,
    g: &Dhg,
    r: &Dhg,
    host: &Dhg,
    chi: &Matching,
) -> Result<Pushout, DpoError> {
    psi.check_endpoints(g, r)?;
    chi.check_endpoints(g, host)?;
    // Host nodes (inputs first) precede the nodes of r, so least members
    // prefer the host side and, within it, inputs.
    let slots: Vec<(bool, NodeId)> =
        host.nodes().map(|n| (true, n)).chain(r.nodes().map(|n| (false, n))).collect();
    let index: BTreeMap<(bool, NodeId), usize> = slots.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut uf = UnionFind::new(slots.len());
    for n in g.nodes() {
        uf.union(index[&(true, chi.node(n))], index[&(false, psi.node(n))]);
    }
    let least = uf.least_members();
    for (i, slot) in slots.iter().enumerate() {
        if let (true, NodeId::Input(p)) = slot {
            if let (true, NodeId::Input(q)) = slots[least[i]] {
                if p != &q {
                    return Err(DpoError::PushoutMergesInputs(q, *p));
                }
            }
        }
    }
    let mut fresh_node = host.next_inner_id();
    let mut realized: BTreeMap<usize, NodeId> = BTreeMap::new();
    let mut inner = BTreeSet::new();
    for rep in least.iter().copied().collect::<BTreeSet<_>>() {
        let node = match slots[rep] {
            (true, n @ NodeId::Input(_)) => n,
            (true, n @ NodeId::Inner(_)) => n,
            (false, NodeId::Inner(_)) => {
                let n = NodeId::Inner(InnerId(fresh_node));
                fresh_node += 1;
                n
            }
            (false, NodeId::Input(_)) => unreachable!("inputs of r are glued to the host"),
        };
        if let NodeId::Inner(id) = node {
            inner.insert(id);
        }
        realized.insert(rep, node);
    }
    let at = |side: bool, n: NodeId| realized[&least[index[&(side, n)]]];

    // Edges of g identify an edge of r with an edge of the host.
    let glued_edges: BTreeMap<EdgeId, EdgeId> = g.edge_ids().map(|e| (psi.edge(e), chi.edge(e))).collect();
    let mut edges = BTreeMap::new();
    let mut omega_edges = BTreeMap::new();
    for (id, e) in host.edges() {
        omega_edges.insert(id, id);
        edges.insert(id, requotient(e, |n| at(true, n)));
    }
    let mut fresh_edge = host.next_edge_id();
    let mut m2_edges = BTreeMap::new();
    for (id, e) in r.edges() {
        let target = match glued_edges.get(&id) {
            Some(h) => *h,
            None => {
                let t = EdgeId(fresh_edge);
                fresh_edge += 1;
                edges.insert(t, requotient(e, |n| at(false, n)));
                t
            }
        };
        m2_edges.insert(id, target);
    }
    let outputs = host.outputs().iter().map(|n| at(true, *n)).collect();
    let result = Dhg::from_parts(host.inputs(), inner, edges, outputs);
    let m2_nodes = r.nodes().map(|n| (n, at(false, n))).collect();
    let m2 = check_matching(r, &result, m2_nodes, m2_edges)?;
    let omega_nodes = host.nodes().map(|n| (n, at(true, n))).collect();
    let omega = check_homomorphism(host, &result, omega_nodes, omega_edges)?;
    Ok(Pushout { result, m2, omega })
}

fn requotient(e: &Edge, at: impl Fn(NodeId) -> NodeId) -> Edge {
    let out = at(NodeId::Inner(e.out)).as_inner().expect("edge output realized as inner node");
    Edge { label: e.label.clone(), out, ins: e.ins.iter().map(|n| at(*n)).collect() }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RewriteOptions {
    /// Skip rule solidity and match injectivity checks. The dangling
    /// condition is still enforced since without it no pushout complement
    /// exists.
    pub unsafe_bypass: bool,
}

/// A completed double-pushout diagram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteResult {
    pub host: Dhg,
    pub result: TermGraph,
    pub chi: Matching,
    pub xi: Homomorphism,
    pub m2: Matching,
    pub omega: Homomorphism,
}

impl RewriteResult {
    /// Pointwise commutation of both squares: `Φ;M1 = Χ;Ξ` and `Ψ;M2 = Χ;Ω`.
    pub fn check_squares(&self, rule: &Rule, m1: &Matching) -> Result<(), DpoError> {
        let left = rule.phi.matching().then(m1)?;
        if left != self.chi.then(&self.xi)? {
            return Err(DpoError::SquareViolated("left"));
        }
        let right = rule.psi.matching().then(&self.m2)?;
        if right != self.chi.then(&self.omega)? {
            return Err(DpoError::SquareViolated("right"));
        }
        Ok(())
    }
}

/// One rewrite step of `a` with `rule` at `m1`.
pub fn rewrite(
    rule: &Rule,
    a: &TermGraph,
    m1: &Matching,
    options: RewriteOptions,
) -> Result<RewriteResult, DpoError> {
    m1.check_endpoints(&rule.lhs, a)?;
    if !options.unsafe_bypass {
        if let Some(v) = rule.solidity_violation() {
            return Err(DpoError::LhsNotSolid(v));
        }
        if !m1.is_injective() {
            return Err(DpoError::NotInjectiveMatch);
        }
    }
    let Complement { host, chi, xi } = pushout_complement_along(&rule.phi, &rule.gluing, &rule.lhs, a, m1)?;
    let Pushout { result, m2, omega } = pushout(rule, &host, &chi)?;
    let result = TermGraph::new(result).map_err(|e| {
        if options.unsafe_bypass {
            DpoError::ResultNotTermGraph(e)
        } else if let TermGraphError::CycleDetected(cycle) = e {
            DpoError::CycleCreated(cycle)
        } else {
            DpoError::Unsound(e)
        }
    })?;
    let step = RewriteResult { host, result, chi, xi, m2, omega };
    step.check_squares(rule, m1)?;
    Ok(step)
}
