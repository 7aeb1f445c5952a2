//! Evaluation of term graphs in gs-monoidal targets.
//!
//! A target fixes a value set and a total function per label. Evaluating a
//! term graph follows its edges in dependency order; since the builtin
//! targets are cartesian, edges that no output depends on are skipped. The
//! costed target additionally counts primitive applications, garbage
//! included, which makes it sensitive to sharing and discarded work.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{AlgebraError, GsExpr};
use crate::dpo::{RewriteResult, Rule};
use crate::graph::{NodeId, Signature, TermGraph};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("no operation `{label}` of arity {arity}")]
    MissingOp { label: String, arity: usize },
    #[error("expected {expected} input values, got {found}")]
    InputLength { expected: usize, found: usize },
    #[error("the value set is infinite or too large to enumerate")]
    NotEnumerable,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A gs-monoidal target given by a value set and one function per label.
pub trait Interpretation {
    type Value: Clone + PartialEq + fmt::Debug;

    /// Applies `label` to `args`, or `None` if the target has no such
    /// operation at this arity.
    fn apply(&self, label: &str, args: &[Self::Value]) -> Option<Self::Value>;

    fn has_op(&self, label: &str, arity: usize) -> bool;

    /// Every value, when the value set is finite and small enough to list.
    fn domain(&self) -> Option<Vec<Self::Value>>;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Value;

    fn is_cartesian(&self) -> bool {
        true
    }

    fn check_signature(&self, sig: &Signature) -> Result<(), SemanticsError> {
        for (label, arity) in sig.iter() {
            if !self.has_op(label, arity) {
                return Err(SemanticsError::MissingOp { label: label.into(), arity });
            }
        }
        Ok(())
    }
}

/// Arithmetic on `u64` values: `add`, `sub`, `mul`, `neg` and nullary
/// `const_<n>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// Integers modulo `p`.
    ZMod(u64),
    /// Machine integers with two's complement wraparound.
    Wrap64,
}

const MAX_DOMAIN: u64 = 1 << 16;

impl Builtin {
    fn reduce(self, v: u128) -> u64 {
        match self {
            Builtin::ZMod(p) => (v % p as u128) as u64,
            Builtin::Wrap64 => v as u64,
        }
    }

    fn constant(label: &str) -> Option<u64> {
        label.strip_prefix("const_")?.parse().ok()
    }
}

impl Interpretation for Builtin {
    type Value = u64;

    fn apply(&self, label: &str, args: &[u64]) -> Option<u64> {
        let p = match *self {
            Builtin::ZMod(p) => p as u128,
            Builtin::Wrap64 => 1 << 64,
        };
        let v = match (label, args) {
            ("add", [a, b]) => *a as u128 + *b as u128,
            ("sub", [a, b]) => *a as u128 + (p - *b as u128 % p),
            ("mul", [a, b]) => *a as u128 * *b as u128,
            ("neg", [a]) => p - *a as u128 % p,
            (l, []) => Builtin::constant(l)? as u128,
            _ => return None,
        };
        Some(self.reduce(v))
    }

    fn has_op(&self, label: &str, arity: usize) -> bool {
        match label {
            "add" | "sub" | "mul" => arity == 2,
            "neg" => arity == 1,
            l => arity == 0 && Builtin::constant(l).is_some(),
        }
    }

    fn domain(&self) -> Option<Vec<u64>> {
        match *self {
            Builtin::ZMod(p) if p <= MAX_DOMAIN => Some((0..p).collect()),
            _ => None,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Builtin::ZMod(p) => rng.random_range(0..p),
            Builtin::Wrap64 => rng.random(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseBuiltinError {
    #[error("unknown interpretation `{0}`, expected zmod:<p> or wrap64")]
    Unknown(String),
    #[error("modulus must be a positive integer")]
    Modulus,
}

impl FromStr for Builtin {
    type Err = ParseBuiltinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "wrap64" {
            return Ok(Builtin::Wrap64);
        }
        match s.strip_prefix("zmod:") {
            Some(p) => match p.parse::<u64>() {
                Ok(p) if p > 0 => Ok(Builtin::ZMod(p)),
                _ => Err(ParseBuiltinError::Modulus),
            },
            None => Err(ParseBuiltinError::Unknown(s.into())),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::ZMod(p) => write!(f, "zmod:{p}"),
            Builtin::Wrap64 => f.write_str("wrap64"),
        }
    }
}

/// `⟦t⟧(input)`.
pub fn eval<I: Interpretation>(interp: &I, t: &TermGraph, input: &[I::Value]) -> Result<Vec<I::Value>, SemanticsError> {
    if input.len() != t.inputs() {
        return Err(SemanticsError::InputLength { expected: t.inputs(), found: input.len() });
    }
    let live = t.live_nodes();
    let mut values = alloc::collections::BTreeMap::new();
    let value = |n: &NodeId, values: &alloc::collections::BTreeMap<_, I::Value>| match n {
        NodeId::Input(p) => input[*p].clone(),
        NodeId::Inner(id) => values[id].clone(),
    };
    for e in t.topological_order() {
        let edge = t.edge(*e).unwrap();
        if !live.contains(&NodeId::Inner(edge.out)) {
            continue;
        }
        let args: Vec<I::Value> = edge.ins.iter().map(|n| value(n, &values)).collect();
        let v = interp.apply(&edge.label, &args).ok_or_else(|| SemanticsError::MissingOp {
            label: edge.label.clone(),
            arity: args.len(),
        })?;
        values.insert(edge.out, v);
    }
    Ok(t.outputs().iter().map(|n| value(n, &values)).collect())
}

/// Evaluates an expression compositionally, without building its graph.
pub fn eval_expr<I: Interpretation>(
    interp: &I,
    sig: &Signature,
    e: &GsExpr,
    input: &[I::Value],
) -> Result<Vec<I::Value>, SemanticsError> {
    let (m, _) = e.interface(sig)?;
    if input.len() != m {
        return Err(SemanticsError::InputLength { expected: m, found: input.len() });
    }
    eval_expr_typed(interp, sig, e, input)
}

fn eval_expr_typed<I: Interpretation>(
    interp: &I,
    sig: &Signature,
    e: &GsExpr,
    input: &[I::Value],
) -> Result<Vec<I::Value>, SemanticsError> {
    Ok(match e {
        GsExpr::Prim(l) => {
            let v = interp
                .apply(l, input)
                .ok_or_else(|| SemanticsError::MissingOp { label: l.clone(), arity: input.len() })?;
            alloc::vec![v]
        }
        GsExpr::Id(_) => input.to_vec(),
        GsExpr::Exch(m, _) => input[*m..].iter().chain(&input[..*m]).cloned().collect(),
        GsExpr::Dup(_) => input.iter().chain(input).cloned().collect(),
        GsExpr::Bang(_) => Vec::new(),
        GsExpr::Seq(a, b) => {
            let mid = eval_expr_typed(interp, sig, a, input)?;
            eval_expr_typed(interp, sig, b, &mid)?
        }
        GsExpr::Ten(a, b) => {
            let (am, _) = a.interface(sig)?;
            let mut out = eval_expr_typed(interp, sig, a, &input[..am])?;
            out.extend(eval_expr_typed(interp, sig, b, &input[am..])?);
            out
        }
    })
}

/// A target whose morphisms also carry the number of primitive applications.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Costed<I>(pub I);

impl<I: Interpretation> Costed<I> {
    pub fn is_cartesian(&self) -> bool {
        false
    }
}

/// Values as [`eval`], and the cost: one unit per edge, garbage included.
pub fn eval_cost<I: Interpretation>(
    interp: &Costed<I>,
    t: &TermGraph,
    input: &[I::Value],
) -> Result<(Vec<I::Value>, usize), SemanticsError> {
    Ok((eval(&interp.0, t, input)?, t.edge_count()))
}

/// How input vectors are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Every vector, in lexicographic order.
    Exhaustive,
    /// `count` vectors drawn from a ChaCha8 stream seeded with `seed`.
    Sampled { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("expected `exhaustive` or `sample:<count>:<seed>`")]
pub struct ParseModeError;

impl FromStr for Mode {
    type Err = ParseModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exhaustive" {
            return Ok(Mode::Exhaustive);
        }
        let rest = s.strip_prefix("sample:").ok_or(ParseModeError)?;
        let (count, seed) = rest.split_once(':').ok_or(ParseModeError)?;
        Ok(Mode::Sampled {
            count: count.parse().map_err(|_| ParseModeError)?,
            seed: seed.parse().map_err(|_| ParseModeError)?,
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exhaustive => f.write_str("exhaustive"),
            Mode::Sampled { count, seed } => write!(f, "sample:{count}:{seed}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample<V> {
    pub input: Vec<V>,
    pub left: Vec<V>,
    pub right: Vec<V>,
}

/// Outcome of comparing two term graphs on a set of inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict<V> {
    pub mode: Mode,
    pub checked: u64,
    pub mismatches: u64,
    /// The first mismatching input in the order checked.
    pub counterexample: Option<Counterexample<V>>,
}

impl<V> Verdict<V> {
    pub fn preserved(&self) -> bool {
        self.mismatches == 0
    }
}

/// Compares `⟦left⟧` and `⟦right⟧` on the inputs selected by `mode`.
pub fn compare<I: Interpretation>(
    interp: &I,
    left: &TermGraph,
    right: &TermGraph,
    mode: Mode,
) -> Result<Verdict<I::Value>, SemanticsError> {
    if left.interface() != right.interface() {
        return Err(SemanticsError::InputLength { expected: left.inputs(), found: right.inputs() });
    }
    let mut verdict = Verdict { mode, checked: 0, mismatches: 0, counterexample: None };
    let mut check = |input: &[I::Value]| -> Result<(), SemanticsError> {
        let l = eval(interp, left, input)?;
        let r = eval(interp, right, input)?;
        verdict.checked += 1;
        if l != r {
            verdict.mismatches += 1;
            if verdict.counterexample.is_none() {
                verdict.counterexample = Some(Counterexample { input: input.to_vec(), left: l, right: r });
            }
        }
        Ok(())
    };
    let m = left.inputs();
    match mode {
        Mode::Exhaustive => {
            let domain = interp.domain().ok_or(SemanticsError::NotEnumerable)?;
            if domain.is_empty() {
                return Ok(verdict);
            }
            let mut digits = alloc::vec![0usize; m];
            loop {
                let input: Vec<I::Value> = digits.iter().map(|d| domain[*d].clone()).collect();
                check(&input)?;
                let Some(pos) = digits.iter().rposition(|d| d + 1 < domain.len()) else { break };
                digits[pos] += 1;
                digits[pos + 1..].fill(0);
            }
        }
        Mode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let input: Vec<I::Value> = (0..m).map(|_| interp.sample(&mut rng)).collect();
                check(&input)?;
            }
        }
    }
    Ok(verdict)
}

/// `⟦L⟧ = ⟦R⟧` on the inputs selected by `mode`.
pub fn rule_preserves<I: Interpretation>(interp: &I, rule: &Rule, mode: Mode) -> Result<Verdict<I::Value>, SemanticsError> {
    compare(interp, rule.lhs(), rule.rhs(), mode)
}

/// `⟦A⟧ = ⟦B⟧` for a rewrite step `A ⇒ B`.
pub fn step_preserves<I: Interpretation>(
    interp: &I,
    a: &TermGraph,
    step: &RewriteResult,
    mode: Mode,
) -> Result<Verdict<I::Value>, SemanticsError> {
    compare(interp, a, &step.result, mode)
}

/// The costed view of a comparison: values agree and so do costs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostedVerdict<V> {
    pub values: Verdict<V>,
    pub cost_before: usize,
    pub cost_after: usize,
}

impl<V> CostedVerdict<V> {
    pub fn preserved(&self) -> bool {
        self.values.preserved() && self.cost_before == self.cost_after
    }
}

pub fn step_preserves_costed<I: Interpretation>(
    interp: &Costed<I>,
    a: &TermGraph,
    step: &RewriteResult,
    mode: Mode,
) -> Result<CostedVerdict<I::Value>, SemanticsError> {
    compare_costed(interp, a, &step.result, mode)
}

pub fn compare_costed<I: Interpretation>(
    interp: &Costed<I>,
    left: &TermGraph,
    right: &TermGraph,
    mode: Mode,
) -> Result<CostedVerdict<I::Value>, SemanticsError> {
    Ok(CostedVerdict {
        values: compare(&interp.0, left, right, mode)?,
        cost_before: left.edge_count(),
        cost_after: right.edge_count(),
    })
}
