//! Random term graphs, composable pairs and rewrite configurations for
//! property tests.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::context::{image_context, ContextError};
use crate::dpo::Rule;
use crate::graph::{Dhg, Edge, EdgeId, InnerId, NodeId, Signature, TermGraph};
use crate::matching::{check_matching, Matching};

/// A term graph `inputs → outputs` with `edges` edges whose labels are drawn
/// from `sig`. Edge arguments and outputs are picked uniformly among the
/// nodes already present, so sharing and garbage both occur.
pub fn term_graph<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, inputs: usize, edges: usize, outputs: usize) -> TermGraph {
    let labels: Vec<(&str, usize)> = sig.iter().collect();
    let mut pool: Vec<NodeId> = (0..inputs).map(NodeId::Input).collect();
    let mut inner = BTreeSet::new();
    let mut edge_map = BTreeMap::new();
    for i in 0..edges {
        let usable: Vec<&(&str, usize)> = labels.iter().filter(|(_, a)| *a == 0 || !pool.is_empty()).collect();
        let Some((label, arity)) = usable.choose(rng) else { break };
        let ins = (0..*arity).map(|_| *pool.choose(rng).unwrap()).collect();
        let out = InnerId(i as u32);
        inner.insert(out);
        edge_map.insert(EdgeId(i as u32), Edge::new(*label, ins, out));
        pool.push(NodeId::Inner(out));
    }
    let outs = if pool.is_empty() { Vec::new() } else { (0..outputs).map(|_| *pool.choose(rng).unwrap()).collect() };
    TermGraph::new(Dhg::from_parts(inputs, inner, edge_map, outs)).expect("built in dependency order")
}

/// A term graph with interface sizes and edge count drawn up to the bounds.
pub fn any_term_graph<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, max_io: usize, max_edges: usize) -> TermGraph {
    let inputs = rng.random_range(0..=max_io);
    let outputs = rng.random_range(0..=max_io);
    let edges = rng.random_range(0..=max_edges);
    term_graph(rng, sig, inputs, edges, outputs)
}

/// `f : m → k` and `g : k → n`.
pub fn composable_pair<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, max_io: usize, max_edges: usize) -> (TermGraph, TermGraph) {
    let f = any_term_graph(rng, sig, max_io, max_edges);
    let k = f.outputs().len();
    let n = rng.random_range(0..=max_io);
    let edges = rng.random_range(0..=max_edges);
    let g = term_graph(rng, sig, k, edges, n);
    (f, g)
}

/// A rewrite configuration passing every side condition and admitting an
/// image context.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub rule: Rule,
    pub host: TermGraph,
    pub matching: Matching,
}

/// Draws an application graph with at most `max_edges` edges, carves a
/// left-hand side out of it around a random edge, and pairs it with a random
/// right-hand side of the same interface. Non-convex carvings are redrawn.
pub fn configuration<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, max_edges: usize) -> Configuration {
    assert!(max_edges > 0 && !sig.is_empty());
    loop {
        let inputs = rng.random_range(0..=3);
        let edges = rng.random_range(1..=max_edges);
        let outputs = rng.random_range(1..=3);
        let host = term_graph(rng, sig, inputs, edges, outputs);
        if host.edge_count() == 0 {
            continue;
        }
        let (lhs, matching) = carve(rng, &host);
        let rhs_edges = rng.random_range(0..=3);
        let rhs = term_graph(rng, sig, lhs.inputs(), rhs_edges, lhs.outputs().len());
        if !lhs.outputs().is_empty() && rhs.outputs().is_empty() {
            continue;
        }
        let rule = Rule::new(lhs, rhs).expect("carved left-hand sides are solid");
        match image_context(&host, &matching, &rule) {
            Ok(_) => return Configuration { rule, host, matching },
            Err(ContextError::NotConvex(_)) => continue,
            Err(e) => panic!("carved configuration rejected: {e}"),
        }
    }
}

fn carve<R: Rng + ?Sized>(rng: &mut R, host: &TermGraph) -> (TermGraph, Matching) {
    let ids: Vec<EdgeId> = host.edge_ids().collect();
    let mut chosen = BTreeSet::from([*ids.choose(rng).unwrap()]);
    for _ in 0..rng.random_range(0..4) {
        let e = *chosen.iter().copied().collect::<Vec<_>>().choose(rng).unwrap();
        let producers: Vec<EdgeId> = host
            .edge(e)
            .unwrap()
            .ins
            .iter()
            .filter_map(|n| n.as_inner().and_then(|id| host.defining_edge(id)))
            .collect();
        if let Some(p) = producers.choose(rng) {
            chosen.insert(*p);
        }
    }
    let order: Vec<EdgeId> = host.topological_order().iter().copied().filter(|e| chosen.contains(e)).collect();
    let produced: BTreeSet<NodeId> = order.iter().map(|e| NodeId::Inner(host.edge(*e).unwrap().out)).collect();

    let mut boundary_in = Vec::new();
    for e in &order {
        for n in &host.edge(*e).unwrap().ins {
            if !produced.contains(n) && !boundary_in.contains(n) {
                boundary_in.push(*n);
            }
        }
    }
    let used_outside: BTreeSet<NodeId> = host
        .edges()
        .filter(|(e, _)| !chosen.contains(e))
        .flat_map(|(_, edge)| edge.ins.iter().copied())
        .chain(host.outputs().iter().copied())
        .collect();
    let mut boundary_out: Vec<NodeId> =
        produced.iter().copied().filter(|n| used_outside.contains(n) || rng.random_bool(0.3)).collect();
    boundary_out.shuffle(rng);

    let rename = |n: &NodeId| match boundary_in.iter().position(|b| b == n) {
        Some(p) => NodeId::Input(p),
        None => *n,
    };
    let lhs = Dhg::from_parts(
        boundary_in.len(),
        produced.iter().filter_map(|n| n.as_inner()).collect(),
        order
            .iter()
            .map(|e| {
                let edge = host.edge(*e).unwrap();
                (*e, Edge { label: edge.label.clone(), out: edge.out, ins: edge.ins.iter().map(rename).collect() })
            })
            .collect(),
        boundary_out.clone(),
    );
    let lhs = TermGraph::new(lhs).expect("sub-graph of a term graph");
    let nodes = lhs.nodes().map(|n| (n, if let NodeId::Input(p) = n { boundary_in[p] } else { n })).collect();
    let edges = order.iter().map(|e| (*e, *e)).collect();
    let m = check_matching(&lhs, host, nodes, edges).expect("inclusion is a matching");
    (lhs, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpo::{rewrite, RewriteOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig() -> Signature {
        Signature::new([("add", 2), ("neg", 1), ("const_1", 0)]).unwrap()
    }

    #[test]
    fn generated_graphs_have_requested_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = term_graph(&mut rng, &sig(), 2, 5, 3);
            assert_eq!(g.interface(), (2, 3));
            assert_eq!(g.edge_count(), 5);
        }
        let g = term_graph(&mut rng, &Signature::new([("neg", 1)]).unwrap(), 0, 4, 2);
        assert_eq!(g.edge_count(), 0);
        assert!(g.outputs().is_empty());
    }

    #[test]
    fn configurations_rewrite() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let c = configuration(&mut rng, &sig(), 8);
            assert!(c.matching.is_injective());
            rewrite(&c.rule, &c.host, &c.matching, RewriteOptions::default()).unwrap();
        }
    }
}
