//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{fixture, iso_eq, key_set, tg};
use termgraph_core::algebra::{build, seq, ten, to_expression};
use termgraph_core::context::{check_context_preservation_with, image_context, verify_image_context, ContextStrategy};
use termgraph_core::dpo::{rewrite, DpoError, RewriteOptions};
use termgraph_core::matching::find_matchings;
use termgraph_core::semantics::{compare, compare_costed, eval, rule_preserves, step_preserves, Builtin, Costed, Mode};
use termgraph_core::{random, Dhg, NodeId, Signature, TermGraphError};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

fn fig1_reproduction() -> Outcome {
    let start = Instant::now();
    let doc = fixture("fig1.tg");
    let (rule, a, b) = (doc.rule("simp").unwrap(), doc.graph("A").unwrap(), doc.graph("B").unwrap());
    let matches = find_matchings(rule.lhs(), a, true);
    ensure(matches.len() == 1, || format!("{} injective matches, expected 1", matches.len()))?;
    let step = rewrite(rule, a, &matches[0], RewriteOptions::default()).map_err(|e| e.to_string())?;
    ensure(iso_eq(&step.result, b), || "result is not isomorphic to y1 + y2*y4".into())?;
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("1 injective match, result isomorphic to y1 + y2*y4, {t:?}"))
}

fn fig1_semantics() -> Outcome {
    let start = Instant::now();
    let doc = fixture("fig1.tg");
    let (rule, a) = (doc.rule("simp").unwrap(), doc.graph("A").unwrap());
    let m = &find_matchings(rule.lhs(), a, true)[0];
    let step = rewrite(rule, a, m, RewriteOptions::default()).map_err(|e| e.to_string())?;
    let z5 = Builtin::ZMod(5);
    let sv = step_preserves(&z5, a, &step, Mode::Exhaustive).map_err(|e| e.to_string())?;
    ensure(sv.checked == 625 && sv.mismatches == 0, || format!("step: {}/{} mismatches", sv.mismatches, sv.checked))?;
    let rv = rule_preserves(&z5, rule, Mode::Exhaustive).map_err(|e| e.to_string())?;
    ensure(rv.checked == 25 && rv.mismatches == 0, || format!("rule: {}/{} mismatches", rv.mismatches, rv.checked))?;
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("A = B on 625/625 inputs, L = R on 25/25 inputs over Z5, {t:?}"))
}

fn context_preservation() -> Outcome {
    let doc = fixture("fig1.tg");
    let (rule, a) = (doc.rule("simp").unwrap(), doc.graph("A").unwrap());
    let m = &find_matchings(rule.lhs(), a, true)[0];
    let ctx = image_context(a, m, rule).map_err(|e| e.to_string())?;
    ensure(ctx.k == 2, || format!("k = {}", ctx.k))?;
    ensure(ctx.a1.edge_count() == 0, || format!("A1 has {} edges", ctx.a1.edge_count()))?;
    let bypass: std::collections::BTreeSet<NodeId> = ctx.bypass.iter().copied().collect();
    ensure(bypass == [NodeId::Input(0), NodeId::Input(3)].into(), || format!("bypass {:?}", ctx.bypass))?;
    let step = rewrite(rule, a, m, RewriteOptions::default()).map_err(|e| e.to_string())?;
    verify_image_context(a, rule.lhs(), m, &ctx).map_err(|e| format!("A: {e}"))?;
    verify_image_context(&step.result, rule.rhs(), &step.m2, &ctx).map_err(|e| format!("B: {e}"))?;

    let sig = Signature::new([("add", 2), ("sub", 2), ("neg", 1), ("const_1", 0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_edges = 0;
    for k in 0..50 {
        let c = random::configuration(&mut rng, &sig, 12);
        max_edges = max_edges.max(c.host.edge_count());
        let step = rewrite(&c.rule, &c.host, &c.matching, RewriteOptions::default())
            .map_err(|e| format!("triple {k}: {e}"))?;
        for strategy in [ContextStrategy::MinimalTop, ContextStrategy::MaximalTop] {
            let ctx = check_context_preservation_with(&c.host, &c.matching, &c.rule, &step, strategy)
                .map_err(|e| format!("triple {k} ({strategy:?}): {e}"))?;
            let parts = ctx.a1.edge_count() + c.rule.lhs().edge_count() + ctx.a2.edge_count();
            ensure(parts == c.host.edge_count(), || format!("triple {k}: edge partition of A"))?;
            let parts = ctx.a1.edge_count() + c.rule.rhs().edge_count() + ctx.a2.edge_count();
            ensure(parts == step.result.edge_count(), || format!("triple {k}: edge partition of B"))?;
        }
    }
    Ok(format!("simp at A: k = 2, A1 edge-free, verified in A and B; 50/50 random triples (<= {max_edges} edges, two constructions)"))
}

fn negative_fixtures() -> Outcome {
    let mut lines = Vec::new();
    for (file, rule, expected_guard) in [("fig3.tg", "wrap", "LhsNotSolid"), ("fig4.tg", "split", "NotInjectiveMatch")] {
        let doc = fixture(file);
        let (r, a, m) = (doc.rule(rule).unwrap(), doc.graph("A").unwrap(), &doc.named_match("m").unwrap().matching);
        match rewrite(r, a, m, RewriteOptions { unsafe_bypass: true }) {
            Err(DpoError::ResultNotTermGraph(TermGraphError::NodeWithMultipleDefiningEdges { edges, .. }))
                if edges.len() == 2 => {}
            other => return Err(format!("{file} with bypass: {other:?}")),
        }
        let guarded = rewrite(r, a, m, RewriteOptions::default());
        let ok = match &guarded {
            Err(DpoError::LhsNotSolid(_)) => expected_guard == "LhsNotSolid",
            Err(DpoError::NotInjectiveMatch) => expected_guard == "NotInjectiveMatch",
            _ => false,
        };
        ensure(ok, || format!("{file} validated: {guarded:?}"))?;
        lines.push(format!("{file}: ResultNotTermGraph (node with two defining edges) / {expected_guard}"));
    }
    Ok(lines.join("; "))
}

fn gs_monoidal_laws() -> Outcome {
    let laws = support::gs_monoidal_laws(5);
    let failed: Vec<&String> = laws.iter().filter(|(_, ok)| !ok).map(|(n, _)| n).collect();
    ensure(failed.is_empty(), || format!("{} laws fail, first: {}", failed.len(), failed[0]))?;
    let witnesses = support::non_naturality_witnesses();
    let wrong: Vec<&String> = witnesses.iter().filter(|(_, ok)| !ok).map(|(n, _)| n).collect();
    ensure(wrong.is_empty(), || format!("witness is isomorphic: {}", wrong[0]))?;
    Ok(format!("{}/{} law instances hold as isomorphisms; {} non-naturality witnesses non-isomorphic", laws.len(), laws.len(), witnesses.len()))
}

fn functor_laws() -> Outcome {
    let sig = Signature::new([("add", 2), ("sub", 2), ("mul", 2), ("neg", 1), ("const_3", 0)]).unwrap();
    let z7 = Builtin::ZMod(7);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut vectors = 0;
    for k in 0..100 {
        let (f, g) = random::composable_pair(&mut rng, &sig, 3, 5);
        let fg = tg(seq(&f, &g).map_err(|e| e.to_string())?);
        let fxg = tg(ten(&f, &g));
        for v in all_vectors(7, f.inputs()) {
            let mid = eval(&z7, &f, &v).unwrap();
            ensure(eval(&z7, &fg, &v).unwrap() == eval(&z7, &g, &mid).unwrap(), || format!("pair {k}: seq law at {v:?}"))?;
            vectors += 1;
        }
        for v in all_vectors(7, f.inputs() + g.inputs()) {
            let (l, r) = v.split_at(f.inputs());
            let mut expected = eval(&z7, &f, l).unwrap();
            expected.extend(eval(&z7, &g, r).unwrap());
            ensure(eval(&z7, &fxg, &v).unwrap() == expected, || format!("pair {k}: ten law at {v:?}"))?;
            vectors += 1;
        }
    }
    Ok(format!("100/100 pairs over Z7, {vectors} input vectors, exact equality"))
}

fn all_vectors(p: u64, len: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|v| (0..p).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let hosts = support::host_corpus(4);
    let patterns = support::pattern_corpus();
    let mut pairs = 0;
    let mut matches = 0;
    for l in &patterns {
        for a in &hosts {
            let oracle = support::brute_matchings(l, a);
            let all = key_set(&find_matchings(l, a, false));
            ensure(all == key_set(&oracle), || format!("matchings differ for pattern {l:?} in {a:?}"))?;
            let injective: Vec<_> = oracle.into_iter().filter(|m| m.is_injective()).collect();
            ensure(key_set(&find_matchings(l, a, true)) == key_set(&injective), || {
                format!("injective matchings differ for pattern {l:?} in {a:?}")
            })?;
            pairs += 1;
            matches += all.len();
        }
    }
    let matching_time = start.elapsed();

    let (steps, cyclic) = support::corpus_steps(4);
    let mut cospans = 0;
    for (k, (rule, a, m, step)) in steps.iter().enumerate() {
        cospans += support::check_step_universality(rule, a, m, step).map_err(|e| format!("step {k}: {e}"))?;
    }
    Ok(format!(
        "{pairs} pattern/host pairs (hosts <= 4 edges), {matches} matchings identical to enumeration ({matching_time:?}); \
         {} steps, {cospans} commuting cospans with unique mediating matching ({cyclic} cyclic results refused)",
        steps.len()
    ))
}

fn decomposition_round_trip() -> Outcome {
    let sig = Signature::new([("add", 2), ("neg", 1), ("mul", 2), ("const_1", 0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..100 {
        let t = random::any_term_graph(&mut rng, &sig, 3, 10);
        let e = to_expression(&t);
        let back: Dhg = build(&sig, &e).map_err(|err| format!("graph {k}: {err}"))?;
        ensure(iso_eq(&back, &t), || format!("graph {k}: {e} does not rebuild the graph"))?;
    }
    Ok("100/100 random term graphs (<= 10 edges) rebuilt up to isomorphism".into())
}

fn costed_contrast() -> Outcome {
    let doc = fixture("fig1.tg");
    let (rule, a) = (doc.rule("simp").unwrap(), doc.graph("A").unwrap());
    let m = &find_matchings(rule.lhs(), a, true)[0];
    let step = rewrite(rule, a, m, RewriteOptions::default()).map_err(|e| e.to_string())?;
    let z5 = Builtin::ZMod(5);
    let plain = compare(&z5, a, &step.result, Mode::Exhaustive).map_err(|e| e.to_string())?;
    let costed = compare_costed(&Costed(z5), a, &step.result, Mode::Exhaustive).map_err(|e| e.to_string())?;
    ensure(plain.preserved(), || "cartesian verdict not preserved".into())?;
    ensure((costed.cost_before, costed.cost_after) == (4, 2), || {
        format!("cost {} -> {}", costed.cost_before, costed.cost_after)
    })?;
    ensure(!costed.preserved(), || "costed verdict preserved".into())?;
    Ok("cartesian: preserved; costed: 4 -> 2, not preserved".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("fig1-reproduction", fig1_reproduction),
        ("semantics-preservation", fig1_semantics),
        ("context-preservation", context_preservation),
        ("negative-fixtures", negative_fixtures),
        ("gs-monoidal-laws", gs_monoidal_laws),
        ("functor-laws", functor_laws),
        ("oracle-equivalence", oracle_equivalence),
        ("decomposition-round-trip", decomposition_round_trip),
        ("costed-contrast", costed_contrast),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{t:.2?}]", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {} {name}: {detail} [{t:.2?}]", k + 1)
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
