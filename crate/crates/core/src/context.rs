//! Image contexts: factorizations `A ≅ A1 ; (L ⊗ id_k) ; A2` in which the
//! copy of `L` is exactly the image of the match.
//!
//! `A1 : m → i + k` computes the values fed into the match together with `k`
//! bypass wires, `A2 : j + k → n` consumes the match results and the bypass
//! wires. After a rewrite step the same `(k, A1, A2)` is an image context for
//! the right-hand side in the result graph, which is what makes semantic
//! equality of the rule sides carry over to the whole step.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::algebra::{identity, seq_embedded, ten_embedded, AlgebraError};
use crate::dpo::{RewriteResult, Rule, SolidityViolation};
use crate::graph::{Dhg, Edge, EdgeId, NodeId, TermGraph, TermGraphError};
use crate::iso::{iso, iso_seeded, Isomorphism};
use crate::matching::{dangling_ok, DanglingReport, Matching, MatchingError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageContext {
    pub k: usize,
    pub a1: TermGraph,
    pub a2: TermGraph,
    /// The application-graph nodes carried on the `k` internal wires.
    pub bypass: Vec<NodeId>,
}

/// Which edges outside the match go into the top part.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ContextStrategy {
    /// Only the edges the match inputs depend on.
    #[default]
    MinimalTop,
    /// Every edge that does not depend on a match output.
    MaximalTop,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("the match is not injective")]
    NotInjective,
    #[error("left-hand side is not solid: {0}")]
    LhsNotSolid(SolidityViolation),
    #[error("dangling condition fails, no image context exists")]
    PreconditionViolated(DanglingReport),
    #[error("context part is not a term graph: {0}")]
    PartNotTermGraph(TermGraphError),
    /// A path leaves the match image and re-enters it, so no top part can
    /// supply the match inputs without also consuming a match output.
    #[error("match is not convex: node {0} cannot be placed in the top or bottom part")]
    NotConvex(NodeId),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ContextMismatch {
    #[error("context interfaces {top:?} / {bottom:?} do not fit a {pattern:?} pattern in a {host:?} graph")]
    Interface { top: (usize, usize), bottom: (usize, usize), pattern: (usize, usize), host: (usize, usize) },
    #[error("recomposition failed: {0}")]
    Recomposition(AlgebraError),
    #[error("recomposed graph is not isomorphic to the host")]
    NotIsomorphic,
    #[error("no isomorphism maps the pattern copy onto the match image")]
    ImageMismatch,
    #[error(transparent)]
    Context(#[from] ContextError),
}

/// The image context of `m1` built from the minimal top part.
pub fn image_context(a: &TermGraph, m1: &Matching, rule: &Rule) -> Result<ImageContext, ContextError> {
    image_context_with(a, m1, rule, ContextStrategy::MinimalTop)
}

pub fn image_context_with(
    a: &TermGraph,
    m1: &Matching,
    rule: &Rule,
    strategy: ContextStrategy,
) -> Result<ImageContext, ContextError> {
    let l = rule.lhs();
    m1.check_endpoints(l, a)?;
    if !m1.is_injective() {
        return Err(ContextError::NotInjective);
    }
    if let Some(v) = rule.solidity_violation() {
        return Err(ContextError::LhsNotSolid(v));
    }
    let report = dangling_ok(rule.phi(), l, a, m1);
    if !report.ok() {
        return Err(ContextError::PreconditionViolated(report));
    }
    let (i, j) = l.interface();
    let in_images: Vec<NodeId> = (0..i).map(|p| m1.node(NodeId::Input(p))).collect();
    let out_images: Vec<NodeId> = l.outputs().iter().map(|n| m1.node(*n)).collect();
    let image_edges = m1.edge_image();

    let top: BTreeSet<EdgeId> = match strategy {
        ContextStrategy::MinimalTop => {
            let mut top = BTreeSet::new();
            let mut stack = in_images.clone();
            while let Some(n) = stack.pop() {
                let Some(e) = n.as_inner().and_then(|id| a.defining_edge(id)) else { continue };
                if !image_edges.contains(&e) && top.insert(e) {
                    stack.extend(a.edge(e).unwrap().ins.iter().copied());
                }
            }
            top
        }
        ContextStrategy::MaximalTop => {
            let dependent = dependent_edges(a, &out_images, &image_edges);
            a.edge_ids().filter(|e| !image_edges.contains(e) && !dependent.contains(e)).collect()
        }
    };
    let bottom: Vec<EdgeId> =
        a.edge_ids().filter(|e| !image_edges.contains(e) && !top.contains(e)).collect();

    let top_side: BTreeSet<NodeId> = (0..a.inputs())
        .map(NodeId::Input)
        .chain(top.iter().map(|e| NodeId::Inner(a.edge(*e).unwrap().out)))
        .collect();
    for n in top.iter().flat_map(|e| a.edge(*e).unwrap().ins.iter()).chain(&in_images) {
        if !top_side.contains(n) {
            return Err(ContextError::NotConvex(*n));
        }
    }

    let mut bypass = Vec::new();
    let bottom_uses = bottom.iter().flat_map(|e| a.edge(*e).unwrap().ins.iter());
    for n in bottom_uses.chain(a.outputs()) {
        if top_side.contains(n) && !bypass.contains(n) {
            bypass.push(*n);
        }
    }
    let k = bypass.len();

    let a1 = Dhg::from_parts(
        a.inputs(),
        top.iter().map(|e| a.edge(*e).unwrap().out).collect(),
        top.iter().map(|e| (*e, a.edge(*e).unwrap().clone())).collect(),
        in_images.iter().chain(&bypass).copied().collect(),
    );

    let mut rename: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for (q, n) in out_images.iter().enumerate() {
        rename.insert(*n, NodeId::Input(q));
    }
    for (t, n) in bypass.iter().enumerate() {
        rename.insert(*n, NodeId::Input(j + t));
    }
    for e in &bottom {
        let out = NodeId::Inner(a.edge(*e).unwrap().out);
        rename.insert(out, out);
    }
    let translate = |n: &NodeId| rename.get(n).copied().ok_or(ContextError::NotConvex(*n));
    let mut bottom_edges = BTreeMap::new();
    for e in &bottom {
        let edge = a.edge(*e).unwrap();
        let ins = edge.ins.iter().map(translate).collect::<Result<Vec<_>, _>>()?;
        bottom_edges.insert(*e, Edge { label: edge.label.clone(), out: edge.out, ins });
    }
    let outputs = a.outputs().iter().map(translate).collect::<Result<Vec<_>, _>>()?;
    let a2 = Dhg::from_parts(
        j + k,
        bottom.iter().map(|e| a.edge(*e).unwrap().out).collect(),
        bottom_edges,
        outputs,
    );
    Ok(ImageContext {
        k,
        a1: TermGraph::new(a1).map_err(ContextError::PartNotTermGraph)?,
        a2: TermGraph::new(a2).map_err(ContextError::PartNotTermGraph)?,
        bypass,
    })
}

/// Edges outside the image that transitively consume one of `roots`.
fn dependent_edges(a: &TermGraph, roots: &[NodeId], image: &BTreeSet<EdgeId>) -> BTreeSet<EdgeId> {
    let consumers = a.consumers();
    let mut dependent = BTreeSet::new();
    let mut stack = roots.to_vec();
    while let Some(n) = stack.pop() {
        for e in consumers.get(&n).into_iter().flatten() {
            if !image.contains(e) && dependent.insert(*e) {
                stack.push(NodeId::Inner(a.edge(*e).unwrap().out));
            }
        }
    }
    dependent
}

/// Recomposes `A1 ; (pattern ⊗ id_k) ; A2`, finds an isomorphism onto
/// `host`, and checks that it carries the pattern copy exactly onto the
/// image of `m` (nodes and edges, both inclusions).
pub fn verify_image_context(
    host: &Dhg,
    pattern: &TermGraph,
    m: &Matching,
    ctx: &ImageContext,
) -> Result<Isomorphism, ContextMismatch> {
    let (i, j) = pattern.interface();
    let interface_err = || ContextMismatch::Interface {
        top: ctx.a1.interface(),
        bottom: ctx.a2.interface(),
        pattern: (i, j),
        host: host.interface(),
    };
    if ctx.a1.interface() != (host.inputs(), i + ctx.k) || ctx.a2.interface() != (j + ctx.k, host.outputs().len()) {
        return Err(interface_err());
    }
    m.check_endpoints(pattern, host).map_err(ContextError::from)?;
    let middle = ten_embedded(pattern, &identity(ctx.k));
    let upper = seq_embedded(&ctx.a1, &middle.graph).map_err(ContextMismatch::Recomposition)?;
    let whole = seq_embedded(&upper.graph, &ctx.a2).map_err(ContextMismatch::Recomposition)?;
    let copy = middle.left.then(&upper.right).then(&whole.left);

    if iso(&whole.graph, host).is_none() {
        return Err(ContextMismatch::NotIsomorphic);
    }
    let mut seed_nodes = BTreeMap::new();
    for (n, c) in &copy.nodes {
        if let Some(prev) = seed_nodes.insert(*c, m.node(*n)) {
            if prev != m.node(*n) {
                return Err(ContextMismatch::ImageMismatch);
            }
        }
    }
    let seed_edges: BTreeMap<EdgeId, EdgeId> = copy.edges.iter().map(|(e, c)| (*c, m.edge(*e))).collect();
    let w = iso_seeded(&whole.graph, host, &seed_nodes, &seed_edges).ok_or(ContextMismatch::ImageMismatch)?;

    let copy_nodes: BTreeSet<NodeId> = copy.nodes.values().map(|c| w.nodes[c]).collect();
    let copy_edges: BTreeSet<EdgeId> = copy.edges.values().map(|c| w.edges[c]).collect();
    if copy_nodes != m.node_image() || copy_edges != m.edge_image() {
        return Err(ContextMismatch::ImageMismatch);
    }
    Ok(w)
}

/// Computes the image context of `m1` in `a` and checks that it is also an
/// image context of `M2` in the rewrite result.
pub fn check_context_preservation(
    a: &TermGraph,
    m1: &Matching,
    rule: &Rule,
    result: &RewriteResult,
) -> Result<ImageContext, ContextMismatch> {
    check_context_preservation_with(a, m1, rule, result, ContextStrategy::MinimalTop)
}

pub fn check_context_preservation_with(
    a: &TermGraph,
    m1: &Matching,
    rule: &Rule,
    result: &RewriteResult,
    strategy: ContextStrategy,
) -> Result<ImageContext, ContextMismatch> {
    let ctx = image_context_with(a, m1, rule, strategy)?;
    verify_image_context(a, rule.lhs(), m1, &ctx)?;
    verify_image_context(&result.result, rule.rhs(), &result.m2, &ctx)?;
    Ok(ctx)
}
