//! Fixtures and independent oracles shared by the integration tests and the
//! acceptance run.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use termgraph_core::algebra::{bang, dup, exchange, identity, prim, seq, ten};
use termgraph_core::dpo::{rewrite, DpoError, RewriteOptions, RewriteResult, Rule};
use termgraph_core::matching::{check_matching, dangling_ok, Matching};
use termgraph_core::{iso, random, Dhg, Edge, EdgeId, InnerId, NodeId, RawGraph, Signature, TermGraph};
use termgraph::Document;

pub fn fixture(name: &str) -> Document {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    termgraph::parse(&text).unwrap_or_else(|e| panic!("{path}:{e}"))
}

pub fn tg(g: Dhg) -> TermGraph {
    TermGraph::new(g).expect("term graph")
}

pub fn iso_eq(a: &Dhg, b: &Dhg) -> bool {
    iso(a, b).is_some()
}

/// Every gs-monoidal axiom instance over interface sizes `0..=3`, plus
/// category and monoidal coherence on random term graphs. Returns
/// `(description, holds)` pairs.
pub fn gs_monoidal_laws(seed: u64) -> Vec<(String, bool)> {
    let sig = Signature::new([("add", 2), ("neg", 1), ("const_1", 0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut law = |name: String, l: Dhg, r: Dhg| out.push((name, iso_eq(&l, &r)));
    let id = |k| identity(k).into_dhg();
    let s = |f: &Dhg, g: &Dhg| seq(f, g).expect("composable");
    let t = |f: &Dhg, g: &Dhg| ten(f, g);
    let sizes = 0..=3usize;

    law("X_0,0 = id_0".into(), exchange(0, 0).into_dhg(), id(0));
    law("id_0 = !_0".into(), id(0), bang(0).into_dhg());
    law("id_0 = dup_0".into(), id(0), dup(0).into_dhg());
    for a in sizes.clone() {
        let (da, ba, ia) = (dup(a).into_dhg(), bang(a).into_dhg(), id(a));
        law(format!("dup assoc a={a}"), s(&da, &t(&ia, &da)), s(&da, &t(&da, &ia)));
        law(format!("dup comm a={a}"), s(&da, &exchange(a, a)), da.clone());
        law(format!("dup counit a={a}"), s(&da, &t(&ia, &ba)), ia.clone());
        for b in sizes.clone() {
            let ib = id(b);
            law(
                format!("X;X = id a={a} b={b}"),
                s(&exchange(a, b), &exchange(b, a)),
                t(&ia, &ib),
            );
            law(
                format!("dup monoidal a={a} b={b}"),
                s(&dup(a + b), &t(&t(&ia, &exchange(b, a)), &ib)),
                t(&da, &dup(b)),
            );
            law(format!("! monoidal a={a} b={b}"), bang(a + b).into_dhg(), t(&ba, &bang(b)));
            for c in sizes.clone() {
                law(
                    format!("X monoidal a={a} b={b} c={c}"),
                    exchange(a + b, c).into_dhg(),
                    s(&t(&ia, &exchange(b, c)), &t(&exchange(a, c), &ib)),
                );
                for d in sizes.clone() {
                    for k in 0..2 {
                        let (ef, eg) = (rng.random_range(0..4), rng.random_range(0..4));
                        let f = random::term_graph(&mut rng, &sig, a, ef, c).into_dhg();
                        let g = random::term_graph(&mut rng, &sig, b, eg, d).into_dhg();
                        if f.outputs().len() != c || g.outputs().len() != d {
                            continue;
                        }
                        law(
                            format!("X natural a={a} b={b} c={c} d={d} #{k}"),
                            s(&t(&f, &g), &exchange(c, d)),
                            s(&exchange(a, b), &t(&g, &f)),
                        );
                    }
                }
            }
        }
    }
    for k in 0..40 {
        let f = random::any_term_graph(&mut rng, &sig, 3, 4).into_dhg();
        let (m, n) = f.interface();
        law(format!("left unit #{k}"), s(&id(m), &f), f.clone());
        law(format!("right unit #{k}"), s(&f, &id(n)), f.clone());
        let (eg, ng, eh) = (rng.random_range(0..4), rng.random_range(0..3), rng.random_range(0..4));
        let g = random::term_graph(&mut rng, &sig, n, eg, ng).into_dhg();
        let h = random::term_graph(&mut rng, &sig, g.outputs().len(), eh, 2).into_dhg();
        law(format!("seq assoc #{k}"), s(&s(&f, &g), &h), s(&f, &s(&g, &h)));
        law(format!("ten assoc #{k}"), t(&t(&f, &g), &h), t(&f, &t(&g, &h)));
        law(format!("ten unit #{k}"), t(&id(0), &f), f.clone());
        let (f2, g2) = random::composable_pair(&mut rng, &sig, 2, 3);
        law(
            format!("interchange #{k}"),
            t(&s(&f, &g), &s(&f2, &g2)),
            s(&t(&f, &f2), &t(&g, &g2)),
        );
    }
    out
}

/// `F ; !` versus `!` and `F ; ∇` versus `∇ ; (F ⊗ F)` for `F = add`.
/// Both pairs must be non-isomorphic.
pub fn non_naturality_witnesses() -> Vec<(String, bool)> {
    let sig = Signature::new([("add", 2)]).unwrap();
    let add = prim(&sig, "add").unwrap();
    let bang_side = seq(&add, &bang(1)).unwrap();
    let dup_left = seq(&add, &dup(1)).unwrap();
    let dup_right = seq(&dup(2), &ten(&add, &add)).unwrap();
    vec![
        ("add;! differs from !_2".into(), !iso_eq(&bang_side, &bang(2))),
        ("add;dup differs from dup_2;(add*add)".into(), !iso_eq(&dup_left, &dup_right)),
    ]
}

/// Every term graph with one input, the given number of edges over
/// `u/1` and `b/2`, and its last edge output (or the input) as sole output.
pub fn exhaustive_graphs(inputs: usize, edges: usize) -> Vec<TermGraph> {
    let mut out = Vec::new();
    let mut raw = RawGraph { inputs, ..RawGraph::default() };
    extend(&mut raw, edges, &mut out);
    out
}

fn extend(raw: &mut RawGraph, remaining: usize, out: &mut Vec<TermGraph>) {
    if remaining == 0 {
        let mut g = raw.clone();
        g.outputs = vec![match g.inner.last() {
            Some(id) => NodeId::Inner(*id),
            None => NodeId::Input(0),
        }];
        let sig = corpus_signature();
        out.push(TermGraph::new(Dhg::new(&sig, &g).unwrap()).unwrap());
        return;
    }
    let k = raw.inner.len() as u32;
    let pool: Vec<NodeId> = (0..raw.inputs).map(NodeId::Input).chain((0..k).map(NodeId::inner)).collect();
    let mut arg_lists: Vec<(&str, Vec<NodeId>)> = pool.iter().map(|a| ("u", vec![*a])).collect();
    for a in &pool {
        for b in &pool {
            arg_lists.push(("b", vec![*a, *b]));
        }
    }
    for (label, ins) in arg_lists {
        raw.inner.push(InnerId(k));
        raw.edges.push((EdgeId(k), Edge::new(label, ins, InnerId(k))));
        extend(raw, remaining - 1, out);
        raw.inner.pop();
        raw.edges.pop();
    }
}

pub fn corpus_signature() -> Signature {
    Signature::new([("u", 1), ("b", 2)]).unwrap()
}

/// Application graphs: one input, up to `max_edges` edges.
pub fn host_corpus(max_edges: usize) -> Vec<TermGraph> {
    (0..=max_edges).flat_map(|e| exhaustive_graphs(1, e)).collect()
}

/// Patterns: one or two inputs, up to two edges.
pub fn pattern_corpus() -> Vec<TermGraph> {
    (1..=2).flat_map(|m| (0..=2).flat_map(move |e| exhaustive_graphs(m, e))).collect()
}

/// All matchings `src → trg` by enumeration: every label-respecting edge
/// map, the node images it forces, and every choice of image for the
/// remaining nodes, filtered by the matching check.
pub fn brute_matchings(src: &Dhg, trg: &Dhg) -> Vec<Matching> {
    let src_edges: Vec<(EdgeId, &Edge)> = src.edges().collect();
    let trg_nodes: Vec<NodeId> = trg.nodes().collect();
    let mut found = Vec::new();
    let mut choice = vec![0usize; src_edges.len()];
    let options: Vec<Vec<EdgeId>> = src_edges
        .iter()
        .map(|(_, e)| trg.edges().filter(|(_, t)| t.label == e.label).map(|(id, _)| id).collect())
        .collect();
    if options.iter().any(|o| o.is_empty()) {
        return found;
    }
    loop {
        let edges: BTreeMap<EdgeId, EdgeId> =
            src_edges.iter().zip(&choice).enumerate().map(|(k, ((id, _), c))| (*id, options[k][*c])).collect();
        let mut nodes: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut consistent = true;
        for (id, e) in &src_edges {
            let t = trg.edge(edges[id]).unwrap();
            let pairs = std::iter::once((NodeId::Inner(e.out), NodeId::Inner(t.out))).chain(e.ins.iter().copied().zip(t.ins.iter().copied()));
            for (a, b) in pairs {
                if *nodes.entry(a).or_insert(b) != b {
                    consistent = false;
                }
            }
            consistent &= e.ins.len() == t.ins.len();
        }
        if consistent {
            let free: Vec<NodeId> = src.nodes().filter(|n| !nodes.contains_key(n)).collect();
            let mut pick = vec![0usize; free.len()];
            if free.is_empty() || !trg_nodes.is_empty() {
                loop {
                    let mut full = nodes.clone();
                    for (n, p) in free.iter().zip(&pick) {
                        full.insert(*n, trg_nodes[*p]);
                    }
                    if let Ok(m) = check_matching(src, trg, full, edges.clone()) {
                        found.push(m);
                    }
                    if !advance(&mut pick, |_| trg_nodes.len()) {
                        break;
                    }
                }
            }
        }
        if !advance(&mut choice, |k| options[k].len()) {
            break;
        }
    }
    found
}

fn advance(digits: &mut [usize], base: impl Fn(usize) -> usize) -> bool {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < base(k) {
            return true;
        }
        digits[k] = 0;
    }
    false
}

pub type MatchingKey = (Vec<(NodeId, NodeId)>, Vec<(EdgeId, EdgeId)>);

pub fn matching_key(m: &Matching) -> MatchingKey {
    (
        m.nodes().iter().map(|(a, b)| (*a, *b)).collect(),
        m.edges().iter().map(|(a, b)| (*a, *b)).collect(),
    )
}

pub fn key_set(ms: &[Matching]) -> BTreeSet<MatchingKey> {
    ms.iter().map(matching_key).collect()
}

/// Checks that `(p, left, right)` is a pushout of `x1 ← g → x2` (legs `g1`,
/// `g2`) against every cospan into each of `targets`: exactly one mediating
/// matching must exist for each commuting pair. Returns the number of
/// cospans checked, or a description of the first failure.
#[allow(clippy::too_many_arguments)]
pub fn check_pushout(
    g1: &Matching,
    g2: &Matching,
    x1: &Dhg,
    x2: &Dhg,
    p: &Dhg,
    left: &Matching,
    right: &Matching,
    targets: &[&Dhg],
) -> Result<usize, String> {
    let mut checked = 0;
    for t in targets {
        let f1s = brute_matchings(x1, t);
        let f2s = brute_matchings(x2, t);
        let us = brute_matchings(p, t);
        for f1 in &f1s {
            let via1 = g1.then(f1).unwrap();
            for f2 in &f2s {
                if g2.then(f2).unwrap() != via1 {
                    continue;
                }
                checked += 1;
                let mediating =
                    us.iter().filter(|u| left.then(u).unwrap() == *f1 && right.then(u).unwrap() == *f2).count();
                if mediating != 1 {
                    return Err(format!("{mediating} mediating matchings for a commuting cospan"));
                }
            }
        }
    }
    Ok(checked)
}

/// Both squares of `step` are pushouts, tested against cospans into the
/// graphs of the step itself.
pub fn check_step_universality(rule: &Rule, a: &TermGraph, m1: &Matching, step: &RewriteResult) -> Result<usize, String> {
    let targets: [&Dhg; 5] = [&step.result, a, &step.host, rule.rhs(), rule.lhs()];
    let left = check_pushout(rule.phi(), &step.chi, rule.lhs(), &step.host, a, m1, &step.xi, &targets)?;
    let right = check_pushout(rule.psi(), &step.chi, rule.rhs(), &step.host, &step.result, &step.m2, &step.omega, &targets)?;
    Ok(left + right)
}

/// Right-hand sides `i → 1` with at most one edge over `u` and `b`.
pub fn small_rhs(i: usize) -> Vec<TermGraph> {
    let mut out = Vec::new();
    let sig = corpus_signature();
    for p in 0..i {
        out.push(identity_output(i, NodeId::Input(p)));
        let raw = RawGraph {
            inputs: i,
            inner: vec![InnerId(0)],
            edges: vec![(EdgeId(0), Edge::new("u", vec![NodeId::Input(p)], InnerId(0)))],
            outputs: vec![NodeId::inner(0)],
        };
        out.push(tg(Dhg::new(&sig, &raw).unwrap()));
    }
    out
}

fn identity_output(i: usize, n: NodeId) -> TermGraph {
    let raw = RawGraph { inputs: i, outputs: vec![n], ..RawGraph::default() };
    tg(Dhg::new(&corpus_signature(), &raw).unwrap())
}

/// Rewrite steps over the exhaustive corpus: every solid pattern paired with
/// every small right-hand side, at every injective match satisfying the
/// dangling condition, in hosts with at most `max_edges` edges. Also returns
/// how many such matches were refused because the result would be cyclic.
pub fn corpus_steps(max_edges: usize) -> (Vec<(Rule, TermGraph, Matching, RewriteResult)>, usize) {
    let mut steps = Vec::new();
    let mut cyclic = 0;
    let hosts = host_corpus(max_edges);
    for l in pattern_corpus() {
        for r in small_rhs(l.inputs()) {
            let Ok(rule) = Rule::new(l.clone(), r) else { continue };
            for a in &hosts {
                for m in termgraph_core::matching::find_matchings(rule.lhs(), a, true) {
                    if !dangling_ok(rule.phi(), rule.lhs(), a, &m).ok() {
                        continue;
                    }
                    match rewrite(&rule, a, &m, RewriteOptions::default()) {
                        Ok(step) => steps.push((rule.clone(), a.clone(), m, step)),
                        Err(DpoError::CycleCreated(_)) => {
                            let ctx = termgraph_core::context::image_context(a, &m, &rule);
                            assert!(
                                matches!(ctx, Err(termgraph_core::context::ContextError::NotConvex(_))),
                                "cycle at a convex match"
                            );
                            cyclic += 1
                        }
                        Err(e) => panic!("side conditions hold: {e:?}"),
                    }
                }
            }
        }
    }
    (steps, cyclic)
}
