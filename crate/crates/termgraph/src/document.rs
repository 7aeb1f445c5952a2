//! The text format for signatures, graphs, rules and explicit matches.
//!
//! ```text
//! sig { add/2; sub/2; }
//! graph A(2 -> 1) { a = add(in0, in1); out0 = a; }
//! rule cancel(2 -> 1) { lhs { a = add(in0, in1); b = sub(a, in1); out0 = b; } rhs { out0 = in0; } }
//! match m(cancel, A) { in0 -> in0; in1 -> in1; a -> a; b -> b; }
//! ```
//!
//! Definitions inside a block may appear in any order. The parser numbers
//! inner nodes and edges in dependency order (ties broken by position), and
//! the serializer prints nodes as `n<k>` in that same order, so serializing a
//! parsed document and parsing it again gives the same document.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt::{self, Write as _};

use termgraph_core::dpo::{Rule, RuleError};
use termgraph_core::matching::{check_matching, Matching, MatchingError};
use termgraph_core::{
    validate_dhg, Dhg, DhgError, Edge, EdgeId, InnerId, NodeId, RawGraph, Signature, SignatureError, TermGraph,
    TermGraphError,
};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedMatch {
    pub rule: String,
    pub graph: String,
    pub matching: Matching,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub signature: Signature,
    pub graphs: Vec<(String, TermGraph)>,
    pub rules: Vec<(String, Rule)>,
    pub matches: Vec<(String, NamedMatch)>,
}

impl Document {
    pub fn graph(&self, name: &str) -> Option<&TermGraph> {
        self.graphs.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    pub fn named_match(&self, name: &str) -> Option<&NamedMatch> {
        self.matches.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    fn name_taken(&self, name: &str) -> bool {
        self.graph(name).is_some() || self.rule(name).is_some() || self.named_match(name).is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: &'static str, found: String },
    #[error("unexpected character `{0}`")]
    BadCharacter(char),
    #[error("number out of range")]
    BadNumber,
    #[error("name `{0}` is already used")]
    DuplicateName(String),
    #[error("node `{0}` is defined twice")]
    DuplicateDefinition(String),
    #[error("`{0}` is reserved for interface nodes")]
    Reserved(String),
    #[error("node `{0}` is never defined")]
    UndefinedNode(String),
    #[error("input {index} out of range for {inputs} inputs")]
    InputOutOfRange { index: usize, inputs: usize },
    #[error("output {index} out of range for {outputs} outputs")]
    OutputOutOfRange { index: usize, outputs: usize },
    #[error("output {0} assigned twice")]
    OutputAssignedTwice(usize),
    #[error("output {0} never assigned")]
    OutputUnassigned(usize),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("invalid graph: {}", list(.0))]
    Graph(Vec<DhgError>),
    #[error("not a term graph: {0}")]
    TermGraph(TermGraphError),
    #[error(transparent)]
    Rule(RuleError),
    #[error("no rule named `{0}`")]
    UnknownRule(String),
    #[error("no graph named `{0}`")]
    UnknownGraph(String),
    #[error("node `{0}` is not mapped")]
    Unmapped(String),
    #[error("invalid match: {0}")]
    Matching(MatchingError),
}

fn list(errors: &[DhgError]) -> String {
    errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    Punct(&'static str),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
        } else if c == '/' {
            bump(&mut chars);
            if chars.peek() == Some(&'/') {
                while chars.peek().is_some_and(|c| *c != '\n') {
                    bump(&mut chars);
                }
            } else {
                tokens.push(Token { tok: Tok::Punct("/"), line: tl, column: tc });
            }
        } else if c == '-' {
            bump(&mut chars);
            if chars.peek() == Some(&'>') {
                bump(&mut chars);
                tokens.push(Token { tok: Tok::Punct("->"), line: tl, column: tc });
            } else {
                return Err(ParseError { line: tl, column: tc, kind: ParseErrorKind::BadCharacter('-') });
            }
        } else if c.is_ascii_alphabetic() || c == '_' || c.is_ascii_digit() {
            let mut s = String::new();
            while chars.peek().is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
                s.push(bump(&mut chars));
            }
            let tok = if s.bytes().all(|b| b.is_ascii_digit()) { Tok::Number(s) } else { Tok::Ident(s) };
            tokens.push(Token { tok, line: tl, column: tc });
        } else {
            let p = match c {
                '{' => "{",
                '}' => "}",
                '(' => "(",
                ')' => ")",
                ';' => ";",
                ',' => ",",
                '=' => "=",
                _ => return Err(ParseError { line: tl, column: tc, kind: ParseErrorKind::BadCharacter(c) }),
            };
            bump(&mut chars);
            tokens.push(Token { tok: Tok::Punct(p), line: tl, column: tc });
        }
    }
    tokens.push(Token { tok: Tok::End, line, column });
    Ok(tokens)
}

/// `inK` / `outK` recognizers.
fn interface_index(name: &str, prefix: &str) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    graph_scopes: BTreeMap<String, BTreeMap<String, NodeId>>,
    lhs_scopes: BTreeMap<String, BTreeMap<String, NodeId>>,
}

// name, its token, label, arguments with tokens
type Definition = (String, Token, String, Vec<(String, Token)>);

/// A parsed graph block with the names it used.
struct Block {
    graph: TermGraph,
    names: BTreeMap<String, NodeId>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Token, kind: ParseErrorKind) -> ParseError {
        ParseError { line: t.line, column: t.column, kind }
    }

    fn unexpected(t: &Token, expected: &'static str) -> ParseError {
        Self::error_at(t, ParseErrorKind::Unexpected { expected, found: t.tok.to_string() })
    }

    fn punct(&mut self, p: &'static str) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == Tok::Punct(p) {
            Ok(t)
        } else {
            Err(Self::unexpected(&t, p))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn ident(&mut self) -> Result<(String, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t)),
            _ => Err(Self::unexpected(&t, "a name")),
        }
    }

    fn keyword(&mut self, k: &'static str) -> Result<Token, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == k => Ok(t),
            _ => Err(Self::unexpected(&t, k)),
        }
    }

    fn number(&mut self) -> Result<usize, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Number(s) => s.parse().map_err(|_| Self::error_at(&t, ParseErrorKind::BadNumber)),
            _ => Err(Self::unexpected(&t, "a number")),
        }
    }

    fn interface(&mut self) -> Result<(usize, usize), ParseError> {
        self.punct("(")?;
        let m = self.number()?;
        self.punct("->")?;
        let n = self.number()?;
        self.punct(")")?;
        Ok((m, n))
    }

    fn document(&mut self) -> Result<Document, ParseError> {
        let mut doc = Document::default();
        loop {
            let t = self.next();
            match &t.tok {
                Tok::End => return Ok(doc),
                Tok::Ident(k) if k == "sig" => self.signature(&mut doc.signature)?,
                Tok::Ident(k) if k == "graph" => {
                    let (name, _) = self.fresh_name(&doc)?;
                    let (m, n) = self.interface()?;
                    let block = self.block(&doc.signature, m, n)?;
                    self.graph_scopes.insert(name.clone(), block.names);
                    doc.graphs.push((name, block.graph));
                }
                Tok::Ident(k) if k == "rule" => {
                    let (name, nt) = self.fresh_name(&doc)?;
                    let (i, j) = self.interface()?;
                    self.punct("{")?;
                    self.keyword("lhs")?;
                    let lhs = self.block(&doc.signature, i, j)?;
                    self.keyword("rhs")?;
                    let rhs = self.block(&doc.signature, i, j)?;
                    self.punct("}")?;
                    let rule = Rule::new_unchecked(lhs.graph, rhs.graph)
                        .map_err(|e| Self::error_at(&nt, ParseErrorKind::Rule(e)))?;
                    self.lhs_scopes.insert(name.clone(), lhs.names);
                    doc.rules.push((name, rule));
                }
                Tok::Ident(k) if k == "match" => {
                    let (name, nt) = self.fresh_name(&doc)?;
                    let m = self.match_block(&doc, &nt)?;
                    doc.matches.push((name, m));
                }
                _ => return Err(Self::unexpected(&t, "`sig`, `graph`, `rule` or `match`")),
            }
        }
    }

    fn fresh_name(&mut self, doc: &Document) -> Result<(String, Token), ParseError> {
        let (name, t) = self.ident()?;
        if doc.name_taken(&name) {
            return Err(Self::error_at(&t, ParseErrorKind::DuplicateName(name)));
        }
        Ok((name, t))
    }

    fn signature(&mut self, sig: &mut Signature) -> Result<(), ParseError> {
        self.punct("{")?;
        while !self.is_punct("}") {
            let (label, t) = self.ident()?;
            self.punct("/")?;
            let arity = self.number()?;
            self.punct(";")?;
            sig.declare(label, arity).map_err(|e| Self::error_at(&t, e.into()))?;
        }
        self.punct("}")?;
        Ok(())
    }

    fn block(&mut self, sig: &Signature, inputs: usize, outputs: usize) -> Result<Block, ParseError> {
        let open = self.punct("{")?;
        let mut defs: Vec<Definition> = Vec::new();
        let mut outs: Vec<Option<(String, Token)>> = vec![None; outputs];
        while !self.is_punct("}") {
            let (lhs, lt) = self.ident()?;
            self.punct("=")?;
            let (rhs, rt) = self.ident()?;
            if let Some(q) = interface_index(&lhs, "out") {
                if q >= outputs {
                    return Err(Self::error_at(&lt, ParseErrorKind::OutputOutOfRange { index: q, outputs }));
                }
                if outs[q].is_some() {
                    return Err(Self::error_at(&lt, ParseErrorKind::OutputAssignedTwice(q)));
                }
                outs[q] = Some((rhs, rt));
                self.punct(";")?;
                continue;
            }
            if interface_index(&lhs, "in").is_some() {
                return Err(Self::error_at(&lt, ParseErrorKind::Reserved(lhs)));
            }
            if defs.iter().any(|d| d.0 == lhs) {
                return Err(Self::error_at(&lt, ParseErrorKind::DuplicateDefinition(lhs)));
            }
            self.punct("(")?;
            let mut args = Vec::new();
            while !self.is_punct(")") {
                if !args.is_empty() {
                    self.punct(",")?;
                }
                args.push(self.ident()?);
            }
            self.punct(")")?;
            self.punct(";")?;
            defs.push((lhs, lt, rhs, args));
        }
        self.punct("}")?;

        let index: BTreeMap<&str, usize> = defs.iter().enumerate().map(|(k, d)| (d.0.as_str(), k)).collect();
        let resolve_input = |name: &str, t: &Token| -> Result<Option<NodeId>, ParseError> {
            match interface_index(name, "in") {
                Some(p) if p < inputs => Ok(Some(NodeId::Input(p))),
                Some(p) => Err(Self::error_at(t, ParseErrorKind::InputOutOfRange { index: p, inputs })),
                None if index.contains_key(name) => Ok(None),
                None => Err(Self::error_at(t, ParseErrorKind::UndefinedNode(name.into()))),
            }
        };
        // dependency order, earliest definition first among the ready ones
        let mut waiting: Vec<usize> = vec![0; defs.len()];
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); defs.len()];
        for (k, d) in defs.iter().enumerate() {
            for (a, at) in &d.3 {
                if resolve_input(a, at)?.is_none() {
                    waiting[k] += 1;
                    dependents[index[a.as_str()]].push(k);
                }
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..defs.len()).filter(|k| waiting[*k] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(defs.len());
        while let Some(Reverse(k)) = ready.pop() {
            order.push(k);
            for d in &dependents[k] {
                waiting[*d] -= 1;
                if waiting[*d] == 0 {
                    ready.push(Reverse(*d));
                }
            }
        }
        // cyclic definitions keep their textual order; validation reports the cycle
        let placed: BTreeSet<usize> = order.iter().copied().collect();
        order.extend((0..defs.len()).filter(|k| !placed.contains(k)));

        let mut names: BTreeMap<String, NodeId> =
            (0..inputs).map(|p| (format!("in{p}"), NodeId::Input(p))).collect();
        for (id, k) in order.iter().enumerate() {
            names.insert(defs[*k].0.clone(), NodeId::inner(id as u32));
        }
        let mut raw = RawGraph { inputs, ..RawGraph::default() };
        for (id, k) in order.iter().enumerate() {
            let (_, _, label, args) = &defs[*k];
            let mut ins = Vec::new();
            for (a, at) in args {
                ins.push(resolve_input(a, at)?.unwrap_or(names[a.as_str()]));
            }
            raw.inner.push(InnerId(id as u32));
            raw.edges.push((EdgeId(id as u32), Edge::new(label.clone(), ins, InnerId(id as u32))));
        }
        for (q, o) in outs.into_iter().enumerate() {
            let Some((name, t)) = o else {
                return Err(Self::error_at(&open, ParseErrorKind::OutputUnassigned(q)));
            };
            raw.outputs.push(resolve_input(&name, &t)?.unwrap_or(names[name.as_str()]));
        }
        let dhg = validate_dhg(sig, &raw).map_err(|e| Self::error_at(&open, ParseErrorKind::Graph(e)))?;
        let graph = TermGraph::new(dhg).map_err(|e| Self::error_at(&open, ParseErrorKind::TermGraph(e)))?;
        Ok(Block { graph, names })
    }

    fn match_block(&mut self, doc: &Document, at: &Token) -> Result<NamedMatch, ParseError> {
        self.punct("(")?;
        let (rule_name, rt) = self.ident()?;
        self.punct(",")?;
        let (graph_name, gt) = self.ident()?;
        self.punct(")")?;
        let rule = doc.rule(&rule_name).ok_or_else(|| Self::error_at(&rt, ParseErrorKind::UnknownRule(rule_name.clone())))?;
        let graph =
            doc.graph(&graph_name).ok_or_else(|| Self::error_at(&gt, ParseErrorKind::UnknownGraph(graph_name.clone())))?;
        let l_names = self.lhs_scopes[&rule_name].clone();
        let a_names = self.graph_scopes[&graph_name].clone();
        let lookup = |names: &BTreeMap<String, NodeId>, name: &str, t: &Token| {
            names.get(name).copied().ok_or_else(|| Self::error_at(t, ParseErrorKind::UndefinedNode(name.into())))
        };
        self.punct("{")?;
        let mut nodes = BTreeMap::new();
        while !self.is_punct("}") {
            let (l, lt) = self.ident()?;
            self.punct("->")?;
            let (a, a_t) = self.ident()?;
            self.punct(";")?;
            let ln = lookup(&l_names, &l, &lt)?;
            let an = lookup(&a_names, &a, &a_t)?;
            if nodes.insert(ln, an).is_some() {
                return Err(Self::error_at(&lt, ParseErrorKind::DuplicateDefinition(l)));
            }
        }
        let close = self.punct("}")?;
        for n in rule.lhs().nodes() {
            if !nodes.contains_key(&n) {
                let name = l_names.iter().find(|(_, id)| **id == n).map(|(s, _)| s.clone()).unwrap_or_default();
                return Err(Self::error_at(&close, ParseErrorKind::Unmapped(name)));
            }
        }
        let mut edges = BTreeMap::new();
        for (e, edge) in rule.lhs().edges() {
            let target = nodes[&NodeId::Inner(edge.out)];
            let image = target.as_inner().and_then(|id| graph.defining_edge(id));
            match image {
                Some(img) => {
                    edges.insert(e, img);
                }
                None => {
                    let kind = ParseErrorKind::Matching(MatchingError::EquationViolated {
                        equation: termgraph_core::matching::Equation::EdgeOutput,
                        edge: e,
                    });
                    return Err(Self::error_at(at, kind));
                }
            }
        }
        let matching = check_matching(rule.lhs(), graph, nodes, edges)
            .map_err(|e| Self::error_at(at, ParseErrorKind::Matching(e)))?;
        Ok(NamedMatch { rule: rule_name, graph: graph_name, matching })
    }
}

pub fn parse(text: &str) -> Result<Document, ParseError> {
    let mut p = Parser { tokens: lex(text)?, pos: 0, graph_scopes: BTreeMap::new(), lhs_scopes: BTreeMap::new() };
    p.document()
}

/// Parses a document holding a single graph block and returns that graph.
pub fn parse_graph(sig: &Signature, text: &str) -> Result<TermGraph, ParseError> {
    let mut p = Parser { tokens: lex(text)?, pos: 0, graph_scopes: BTreeMap::new(), lhs_scopes: BTreeMap::new() };
    p.keyword("graph")?;
    p.ident()?;
    let (m, n) = p.interface()?;
    let block = p.block(sig, m, n)?;
    let t = p.next();
    if t.tok != Tok::End {
        return Err(Parser::unexpected(&t, "end of input"));
    }
    Ok(block.graph)
}

/// Display names: `in<p>` for inputs, `n<k>` for the `k`-th inner node in
/// dependency order with ties broken by edge id.
pub fn canonical_names(g: &Dhg) -> BTreeMap<NodeId, String> {
    let mut names: BTreeMap<NodeId, String> = (0..g.inputs()).map(|p| (NodeId::Input(p), format!("in{p}"))).collect();
    let order = canonical_order(g);
    for (k, e) in order.iter().enumerate() {
        names.insert(NodeId::Inner(g.edge(*e).unwrap().out), format!("n{k}"));
    }
    // holes, possible in general graphs, come last
    let mut k = order.len();
    for id in g.inner_nodes() {
        names.entry(NodeId::Inner(id)).or_insert_with(|| {
            k += 1;
            format!("n{}", k - 1)
        });
    }
    names
}

fn canonical_order(g: &Dhg) -> Vec<EdgeId> {
    let defs = g.defining_edges();
    let mut waiting: BTreeMap<EdgeId, usize> = BTreeMap::new();
    let mut dependents: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
    for (e, edge) in g.edges() {
        let mut count = 0;
        for n in &edge.ins {
            if let NodeId::Inner(id) = n {
                for d in defs.get(id).into_iter().flatten() {
                    count += 1;
                    dependents.entry(*d).or_default().push(e);
                }
            }
        }
        waiting.insert(e, count);
    }
    let mut ready: BinaryHeap<Reverse<EdgeId>> =
        waiting.iter().filter(|(_, c)| **c == 0).map(|(e, _)| Reverse(*e)).collect();
    let mut order = Vec::new();
    while let Some(Reverse(e)) = ready.pop() {
        order.push(e);
        for d in dependents.get(&e).into_iter().flatten() {
            let c = waiting.get_mut(d).unwrap();
            *c -= 1;
            if *c == 0 {
                ready.push(Reverse(*d));
            }
        }
    }
    let placed: BTreeSet<EdgeId> = order.iter().copied().collect();
    order.extend(g.edge_ids().filter(|e| !placed.contains(e)));
    order
}

fn write_body(out: &mut String, g: &Dhg, indent: &str) {
    let names = canonical_names(g);
    for e in canonical_order(g) {
        let edge = g.edge(e).unwrap();
        let args: Vec<&str> = edge.ins.iter().map(|n| names[n].as_str()).collect();
        let _ = writeln!(out, "{indent}{} = {}({});", names[&NodeId::Inner(edge.out)], edge.label, args.join(", "));
    }
    for (q, n) in g.outputs().iter().enumerate() {
        let _ = writeln!(out, "{indent}out{q} = {};", names[n]);
    }
}

/// `graph <name>(m -> n) { ... }` in canonical form.
pub fn serialize_graph(name: &str, g: &Dhg) -> String {
    let mut out = String::new();
    let (m, n) = g.interface();
    let _ = writeln!(out, "graph {name}({m} -> {n}) {{");
    write_body(&mut out, g, "  ");
    out.push_str("}\n");
    out
}

pub fn serialize_rule(name: &str, rule: &Rule) -> String {
    let mut out = String::new();
    let (i, j) = rule.interface();
    let _ = writeln!(out, "rule {name}({i} -> {j}) {{");
    out.push_str("  lhs {\n");
    write_body(&mut out, rule.lhs(), "    ");
    out.push_str("  }\n  rhs {\n");
    write_body(&mut out, rule.rhs(), "    ");
    out.push_str("  }\n}\n");
    out
}

pub fn serialize_signature(sig: &Signature) -> String {
    let labels: Vec<String> = sig.iter().map(|(l, a)| format!("{l}/{a}; ")).collect();
    format!("sig {{ {}}}\n", labels.concat())
}

pub fn serialize(doc: &Document) -> String {
    let mut parts = vec![serialize_signature(&doc.signature)];
    parts.extend(doc.graphs.iter().map(|(n, g)| serialize_graph(n, g)));
    parts.extend(doc.rules.iter().map(|(n, r)| serialize_rule(n, r)));
    for (name, m) in &doc.matches {
        let (Some(rule), Some(graph)) = (doc.rule(&m.rule), doc.graph(&m.graph)) else { continue };
        let l_names = canonical_names(rule.lhs());
        let a_names = canonical_names(graph);
        let mut s = format!("match {name}({}, {}) {{", m.rule, m.graph);
        for (l, a) in m.matching.nodes() {
            let _ = write!(s, " {} -> {};", l_names[l], a_names[a]);
        }
        s.push_str(" }\n");
        parts.push(s);
    }
    parts.join("\n")
}
