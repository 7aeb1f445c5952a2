//! The `tgr` command line.
//!
//! Exit status is 0 on success, 1 when the input violates a side condition or
//! a semantic check finds a counterexample, and 2 on usage or I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use termgraph_core::context::{image_context_with, verify_image_context, ContextStrategy};
use termgraph_core::dpo::{rewrite, RewriteOptions, Rule};
use termgraph_core::matching::{dangling_ok, find_matchings, Matching};
use termgraph_core::semantics::{compare, compare_costed, Builtin, Costed, Interpretation, Mode, SemanticsError, Verdict};
use termgraph_core::{to_expression, NodeId, TermGraph};

use crate::document::{canonical_names, parse, serialize_graph, Document};
use crate::dot::to_dot;

#[derive(Debug, Parser)]
#[command(name = "tgr", version, about = "Term graph rewriting by double pushouts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a document.
    Check { file: PathBuf },
    /// List the injective matches of a rule's left-hand side.
    Match {
        file: PathBuf,
        #[arg(short, long)]
        rule: String,
        #[arg(short, long)]
        graph: String,
        /// Include non-injective matches.
        #[arg(long)]
        non_injective: bool,
    },
    /// Apply a rule at one match, or separately at every match.
    Rewrite {
        file: PathBuf,
        #[arg(short, long)]
        rule: String,
        #[arg(short, long)]
        graph: String,
        /// Match index from `match`, or the name of a `match` block.
        #[arg(short, long, conflicts_with = "all")]
        m: Option<String>,
        #[arg(long)]
        all: bool,
        /// Skip the solidity and injectivity checks.
        #[arg(long)]
        unsafe_bypass: bool,
    },
    /// Rewrite until no rule applies.
    Normalize {
        file: PathBuf,
        #[arg(short, long)]
        graph: String,
        #[arg(long, value_delimiter = ',', required = true)]
        rules: Vec<String>,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
    },
    /// Print the image context of a match.
    Decompose {
        file: PathBuf,
        #[arg(short, long)]
        rule: String,
        #[arg(short, long)]
        graph: String,
        #[arg(short, long, default_value = "0")]
        m: String,
        /// Put every edge not depending on the match outputs on top.
        #[arg(long)]
        maximal: bool,
    },
    /// Print a gs-monoidal expression denoting a graph.
    Expr {
        file: PathBuf,
        #[arg(short, long)]
        graph: String,
    },
    /// Check that a rule, and optionally one step, preserves meaning.
    Verify {
        file: PathBuf,
        #[arg(short, long)]
        rule: String,
        #[arg(short, long, requires = "m")]
        graph: Option<String>,
        #[arg(short, long, requires = "graph")]
        m: Option<String>,
        /// `zmod:<p>` or `wrap64`.
        #[arg(long)]
        interp: Builtin,
        /// `exhaustive` or `sample:<count>:<seed>`.
        #[arg(long, default_value = "exhaustive")]
        mode: Mode,
        /// Also report the edge-count cost target.
        #[arg(long)]
        cost: bool,
    },
    /// Render a graph in Graphviz format.
    Dot {
        file: PathBuf,
        #[arg(short, long)]
        graph: String,
    },
}

enum Failure {
    Violation(String),
    Usage(String),
}

type Outcome = Result<bool, Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Violation(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn load(file: &PathBuf, parse_failure_is_violation: bool) -> Result<Document, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
    parse(&text).map_err(|e| {
        let msg = format!("{}:{e}", file.display());
        if parse_failure_is_violation {
            Failure::Violation(msg)
        } else {
            Failure::Usage(msg)
        }
    })
}

fn graph<'d>(doc: &'d Document, name: &str) -> Result<&'d TermGraph, Failure> {
    doc.graph(name).ok_or_else(|| Failure::Usage(format!("no graph named `{name}`")))
}

fn rule<'d>(doc: &'d Document, name: &str) -> Result<&'d Rule, Failure> {
    doc.rule(name).ok_or_else(|| Failure::Usage(format!("no rule named `{name}`")))
}

fn candidates(rule: &Rule, a: &TermGraph, non_injective: bool) -> Vec<Matching> {
    find_matchings(rule.lhs(), a, !non_injective)
}

/// A `match` block by name, or an index into the enumerated matches.
fn select(doc: &Document, rule_name: &str, graph_name: &str, key: &str, non_injective: bool) -> Result<(String, Matching), Failure> {
    if let Some(m) = doc.named_match(key) {
        if m.rule != rule_name || m.graph != graph_name {
            return Err(Failure::Usage(format!("match `{key}` is for rule `{}` and graph `{}`", m.rule, m.graph)));
        }
        return Ok((key.to_string(), m.matching.clone()));
    }
    let index: usize = key.parse().map_err(|_| Failure::Usage(format!("`{key}` is neither a match name nor an index")))?;
    let all = candidates(rule(doc, rule_name)?, graph(doc, graph_name)?, non_injective);
    let count = all.len();
    all.into_iter()
        .nth(index)
        .map(|m| (index.to_string(), m))
        .ok_or_else(|| Failure::Usage(format!("match index {index} out of range ({count} matches)")))
}

fn describe(m: &Matching, rule: &Rule, a: &TermGraph) -> String {
    let l_names = canonical_names(rule.lhs());
    let a_names = canonical_names(a);
    let pairs: Vec<String> = m.nodes().iter().map(|(l, t)| format!("{} -> {}", l_names[l], a_names[t])).collect();
    let report = dangling_ok(rule.phi(), rule.lhs(), a, m);
    let status = if report.ok() {
        "dangling ok".to_string()
    } else {
        let c: Vec<String> = report.conflicts.iter().map(|c| c.to_string()).collect();
        format!("dangling violated: {}", c.join("; "))
    };
    format!("{} ({status})", pairs.join(", "))
}

fn values(v: &[u64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn report(out: &mut dyn Write, what: &str, v: &Verdict<u64>) {
    let _ = match &v.counterexample {
        None => writeln!(out, "{what}: preserved ({}/{})", v.checked, v.checked),
        Some(c) => writeln!(
            out,
            "{what}: counterexample at {}: {} vs {} ({}/{} inputs differ)",
            values(&c.input),
            values(&c.left),
            values(&c.right),
            v.mismatches,
            v.checked
        ),
    };
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Check { file } => {
            let doc = load(&file, true)?;
            let _ = writeln!(
                out,
                "ok: {} labels, {} graphs, {} rules, {} matches",
                doc.signature.len(),
                doc.graphs.len(),
                doc.rules.len(),
                doc.matches.len()
            );
            let mut clean = true;
            for (name, r) in &doc.rules {
                if let Some(v) = r.solidity_violation() {
                    let _ = writeln!(err, "rule {name}: left-hand side not solid: {v}");
                    clean = false;
                }
            }
            Ok(clean)
        }
        Command::Match { file, rule: r, graph: g, non_injective } => {
            let doc = load(&file, false)?;
            let (r, a) = (rule(&doc, &r)?, graph(&doc, &g)?);
            let all = candidates(r, a, non_injective);
            let _ = writeln!(out, "{} match{}", all.len(), if all.len() == 1 { "" } else { "es" });
            for (k, m) in all.iter().enumerate() {
                let _ = writeln!(out, "[{k}] {}", describe(m, r, a));
            }
            Ok(true)
        }
        Command::Rewrite { file, rule: rn, graph: gn, m, all, unsafe_bypass } => {
            let doc = load(&file, false)?;
            let (r, a) = (rule(&doc, &rn)?, graph(&doc, &gn)?);
            let selected = if all {
                candidates(r, a, unsafe_bypass).into_iter().enumerate().map(|(k, m)| (k.to_string(), m)).collect()
            } else {
                vec![select(&doc, &rn, &gn, m.as_deref().unwrap_or("0"), unsafe_bypass)?]
            };
            if selected.is_empty() {
                return Err(Failure::Violation(format!("rule `{rn}` does not match `{gn}`")));
            }
            let options = RewriteOptions { unsafe_bypass };
            let mut clean = true;
            for (key, m) in selected {
                match rewrite(r, a, &m, options) {
                    Ok(step) => {
                        let _ = write!(out, "{}", serialize_graph(&format!("{gn}_{key}"), &step.result));
                    }
                    Err(e) => {
                        let _ = writeln!(err, "error: match {key}: {e}");
                        clean = false;
                    }
                }
            }
            Ok(clean)
        }
        Command::Normalize { file, graph: gn, rules, max_steps } => {
            let doc = load(&file, false)?;
            let rules = rules.iter().map(|n| rule(&doc, n)).collect::<Result<Vec<_>, _>>()?;
            let mut g = graph(&doc, &gn)?.clone();
            let step = |g: &TermGraph| {
                rules.iter().find_map(|r| {
                    candidates(r, g, false).iter().find_map(|m| rewrite(r, g, m, RewriteOptions::default()).ok())
                })
            };
            let mut steps = 0;
            let mut pending = step(&g);
            while let Some(s) = pending {
                if steps == max_steps {
                    break;
                }
                g = s.result;
                steps += 1;
                pending = step(&g);
            }
            let _ = write!(out, "{}", serialize_graph(&gn, &g));
            let normal = step(&g).is_none();
            if normal {
                let _ = writeln!(err, "normal form after {steps} step{}", if steps == 1 { "" } else { "s" });
            } else {
                let _ = writeln!(err, "stopped after {steps} steps, rules still apply");
            }
            Ok(normal)
        }
        Command::Decompose { file, rule: rn, graph: gn, m, maximal } => {
            let doc = load(&file, false)?;
            let (r, a) = (rule(&doc, &rn)?, graph(&doc, &gn)?);
            let (_, m) = select(&doc, &rn, &gn, &m, false)?;
            let strategy = if maximal { ContextStrategy::MaximalTop } else { ContextStrategy::MinimalTop };
            let ctx = image_context_with(a, &m, r, strategy).map_err(|e| Failure::Violation(e.to_string()))?;
            let names = canonical_names(a);
            let bypass: Vec<&str> = ctx.bypass.iter().map(|n: &NodeId| names[n].as_str()).collect();
            let _ = writeln!(out, "k = {}", ctx.k);
            let _ = writeln!(out, "bypass: {}", bypass.join(", "));
            let _ = write!(out, "{}", serialize_graph("A1", &ctx.a1));
            let _ = write!(out, "{}", serialize_graph("A2", &ctx.a2));
            verify_image_context(a, r.lhs(), &m, &ctx).map_err(|e| Failure::Violation(e.to_string()))?;
            Ok(true)
        }
        Command::Expr { file, graph: gn } => {
            let doc = load(&file, false)?;
            let _ = writeln!(out, "{}", to_expression(graph(&doc, &gn)?));
            Ok(true)
        }
        Command::Verify { file, rule: rn, graph: gn, m, interp, mode, cost } => {
            let doc = load(&file, false)?;
            let r = rule(&doc, &rn)?;
            interp.check_signature(&doc.signature).map_err(|e| Failure::Usage(format!("{interp}: {e}")))?;
            let semantic = |e: SemanticsError| Failure::Usage(format!("{interp}: {e}"));
            let mut clean = check(out, "rule", &interp, r.lhs(), r.rhs(), mode, cost).map_err(semantic)?;
            if let (Some(gn), Some(m)) = (gn, m) {
                let a = graph(&doc, &gn)?;
                let (_, m) = select(&doc, &rn, &gn, &m, false)?;
                let step = rewrite(r, a, &m, RewriteOptions::default()).map_err(|e| Failure::Violation(e.to_string()))?;
                clean &= check(out, "step", &interp, a, &step.result, mode, cost).map_err(semantic)?;
            }
            Ok(clean)
        }
        Command::Dot { file, graph: gn } => {
            let doc = load(&file, false)?;
            let _ = write!(out, "{}", to_dot(&gn, graph(&doc, &gn)?));
            Ok(true)
        }
    }
}

/// Reports the cartesian verdict, and the costed one if asked. Only the
/// cartesian verdict decides the result.
fn check(
    out: &mut dyn Write,
    what: &str,
    interp: &Builtin,
    left: &TermGraph,
    right: &TermGraph,
    mode: Mode,
    cost: bool,
) -> Result<bool, SemanticsError> {
    let v = if cost {
        let cv = compare_costed(&Costed(*interp), left, right, mode)?;
        report(out, what, &cv.values);
        let status = if cv.preserved() { "preserved" } else { "not preserved" };
        let _ = writeln!(out, "{what} cost: {} -> {} ({status})", cv.cost_before, cv.cost_after);
        cv.values
    } else {
        let v = compare(interp, left, right, mode)?;
        report(out, what, &v);
        v
    };
    Ok(v.preserved())
}
