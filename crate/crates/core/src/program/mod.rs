//! Tactic programs: a small purely functional language whose atoms are
//! tactics and sub-problem calls.
//!
//! ```text
//! program <name>(<p>: <Type>, ...) where <guard-key> = <expr>
//! <expr> := let <x> = <expr> in <expr> | <expr> @@ <expr> | ( <expr> ) | <x>
//!         | SubProblem(<theory>, [<keys>], [<keys>], [<terms>]) | <tactic>
//! ```

mod parser;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::terms::{render, Signature, Term, TermError, Type};

pub use parser::{parse_program, parse_tactic};

pub type Key = Vec<String>;

pub fn key_id(key: &[String]) -> String {
    key.join(",")
}

/// Reserved for control constructs that are not part of the language yet.
pub const RESERVED: [&str; 3] = ["Try", "Repeat", "If"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("term error at offset {pos}: {source}")]
    Term { pos: usize, source: TermError },
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error("dangling {kind} reference `{key}`")]
    DanglingReference { kind: String, key: String },
    #[error("sub-problem {method} expects {expected} arguments, got {found}")]
    ArityMismatch { method: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tactic {
    Take(Term),
    /// Names to look up, equations `x = v`, function definitions `f x = e`,
    /// or one term evaluating to a list of those.
    Substitute(Term),
    Rewrite { rule: String, inst: Vec<(String, Term)> },
    /// `Rewrite_Set` when `inst` is empty, `Rewrite_Set_Inst` otherwise.
    RewriteSet { set: String, inst: Vec<(String, Term)> },
    /// Built-in elementary method solving a linear system.
    SolveSystem { equations: Term, unknowns: Term },
    SubProblem { theory: String, problem: Key, method: Key, args: Vec<Term> },
}

impl Tactic {
    pub fn name(&self) -> &'static str {
        match self {
            Tactic::Take(_) => "Take",
            Tactic::Substitute(_) => "Substitute",
            Tactic::Rewrite { inst, .. } if inst.is_empty() => "Rewrite",
            Tactic::Rewrite { .. } => "Rewrite_Inst",
            Tactic::RewriteSet { inst, .. } if inst.is_empty() => "Rewrite_Set",
            Tactic::RewriteSet { .. } => "Rewrite_Set_Inst",
            Tactic::SolveSystem { .. } => "solveSystem",
            Tactic::SubProblem { .. } => "SubProblem",
        }
    }

    /// Whether the tactic ignores the current term.
    pub fn replaces_term(&self) -> bool {
        matches!(self, Tactic::Take(_) | Tactic::SolveSystem { .. } | Tactic::SubProblem { .. })
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Tactic::Take(t) | Tactic::Substitute(t) => vec![t],
            Tactic::Rewrite { inst, .. } | Tactic::RewriteSet { inst, .. } => inst.iter().map(|(_, t)| t).collect(),
            Tactic::SolveSystem { equations, unknowns } => vec![equations, unknowns],
            Tactic::SubProblem { args, .. } => args.iter().collect(),
        }
    }

    pub fn map_terms(&self, f: &mut dyn FnMut(&Term) -> Term) -> Tactic {
        let inst = |i: &[(String, Term)], f: &mut dyn FnMut(&Term) -> Term| {
            i.iter().map(|(k, v)| (k.clone(), f(v))).collect::<Vec<_>>()
        };
        match self {
            Tactic::Take(t) => Tactic::Take(f(t)),
            Tactic::Substitute(t) => Tactic::Substitute(f(t)),
            Tactic::Rewrite { rule, inst: i } => Tactic::Rewrite { rule: rule.clone(), inst: inst(i, f) },
            Tactic::RewriteSet { set, inst: i } => Tactic::RewriteSet { set: set.clone(), inst: inst(i, f) },
            Tactic::SolveSystem { equations, unknowns } => {
                Tactic::SolveSystem { equations: f(equations), unknowns: f(unknowns) }
            }
            Tactic::SubProblem { theory, problem, method, args } => Tactic::SubProblem {
                theory: theory.clone(),
                problem: problem.clone(),
                method: method.clone(),
                args: args.iter().map(|a| f(a)).collect(),
            },
        }
    }

    pub fn render(&self, sig: &Signature) -> String {
        let r = |t: &Term| render(t, sig);
        let inst = |i: &[(String, Term)]| {
            i.iter().map(|(k, v)| format!("({k}, {})", r(v))).collect::<Vec<_>>().join(", ")
        };
        match self {
            Tactic::Take(t) => format!("Take {}", r(t)),
            Tactic::Substitute(t) => format!("Substitute {}", r(t)),
            Tactic::Rewrite { rule, inst: i } if i.is_empty() => format!("Rewrite {rule}"),
            Tactic::Rewrite { rule, inst: i } => format!("Rewrite {rule} with {}", inst(i)),
            Tactic::RewriteSet { set, inst: i } if i.is_empty() => format!("Rewrite_Set {set}"),
            Tactic::RewriteSet { set, inst: i } => format!("Rewrite_Set_Inst ([{}], {set})", inst(i)),
            Tactic::SolveSystem { equations, unknowns } => format!("solveSystem ({}, {})", r(equations), r(unknowns)),
            Tactic::SubProblem { theory, problem, method, args } => format!(
                "SubProblem({theory}, {}, {}, [{}])",
                render_key(problem),
                render_key(method),
                args.iter().map(r).collect::<Vec<_>>().join(", ")
            ),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

pub fn render_key(key: &[String]) -> String {
    let parts: Vec<String> =
        key.iter().map(|k| if is_ident(k) { k.clone() } else { format!("{k:?}") }).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProgExpr {
    Seq(Box<ProgExpr>, Box<ProgExpr>),
    Let { name: String, value: Box<ProgExpr>, body: Box<ProgExpr> },
    Tactic(Tactic),
    Ref(String),
}

impl ProgExpr {
    /// Sequence elements of a left-nested `@@` chain.
    pub fn seq_items(&self) -> Vec<&ProgExpr> {
        match self {
            ProgExpr::Seq(a, b) => {
                let mut v = a.seq_items();
                v.extend(b.seq_items());
                v
            }
            other => vec![other],
        }
    }

    /// Tactics in evaluation order.
    pub fn tactics(&self) -> Vec<&Tactic> {
        match self {
            ProgExpr::Seq(a, b) => {
                let mut v = a.tactics();
                v.extend(b.tactics());
                v
            }
            ProgExpr::Let { value, body, .. } => {
                let mut v = value.tactics();
                v.extend(body.tactics());
                v
            }
            ProgExpr::Tactic(t) => vec![t],
            ProgExpr::Ref(_) => Vec::new(),
        }
    }

    fn ignores_current(&self) -> bool {
        match self {
            ProgExpr::Tactic(t) => t.replaces_term(),
            ProgExpr::Ref(_) => true,
            ProgExpr::Seq(a, _) => a.ignores_current(),
            ProgExpr::Let { value, .. } => value.ignores_current(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TacticProgram {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub guard: Key,
    pub body: ProgExpr,
}

impl TacticProgram {
    /// Sub-problem calls with their argument counts.
    pub fn sub_problems(&self) -> Vec<(&Key, &Key, usize)> {
        self.body
            .tactics()
            .into_iter()
            .filter_map(|t| match t {
                Tactic::SubProblem { problem, method, args, .. } => Some((problem, method, args.len())),
                _ => None,
            })
            .collect()
    }

    pub fn rule_sets(&self) -> BTreeSet<&str> {
        self.body
            .tactics()
            .into_iter()
            .filter_map(|t| match t {
                Tactic::RewriteSet { set, .. } => Some(set.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn rules(&self) -> BTreeSet<&str> {
        self.body
            .tactics()
            .into_iter()
            .filter_map(|t| match t {
                Tactic::Rewrite { rule, .. } => Some(rule.as_str()),
                _ => None,
            })
            .collect()
    }
}

pub fn render_program(p: &TacticProgram, sig: &Signature) -> String {
    let params: Vec<String> = p.params.iter().map(|(n, t)| format!("{n}: {t}")).collect();
    let mut out = format!("program {}({}) where {} =\n", p.name, params.join(", "), render_key(&p.guard));
    let mut body = &p.body;
    while let ProgExpr::Let { name, value, body: rest } = body {
        out.push_str(&format!("  let {name} = {} in\n", render_inline(value, sig)));
        body = rest;
    }
    let items: Vec<String> = body.seq_items().iter().map(|e| render_seq_item(e, sig)).collect();
    out.push_str("  ");
    out.push_str(&items.join(" @@\n  "));
    out.push('\n');
    out
}

fn render_seq_item(e: &ProgExpr, sig: &Signature) -> String {
    match e {
        ProgExpr::Let { .. } => format!("({})", render_inline(e, sig)),
        _ => render_inline(e, sig),
    }
}

fn render_inline(e: &ProgExpr, sig: &Signature) -> String {
    match e {
        ProgExpr::Seq(..) => {
            let items = e.seq_items();
            let n = items.len();
            items
                .iter()
                .enumerate()
                .map(|(i, x)| if i + 1 < n { render_seq_item(x, sig) } else { render_inline(x, sig) })
                .collect::<Vec<_>>()
                .join(" @@ ")
        }
        ProgExpr::Let { name, value, body } => {
            format!("let {name} = {} in {}", render_inline(value, sig), render_inline(body, sig))
        }
        ProgExpr::Tactic(t) => t.render(sig),
        ProgExpr::Ref(n) => n.clone(),
    }
}

/// Lint findings: unused let bindings and tactics whose result is
/// immediately discarded.
pub fn dead_code(p: &TacticProgram) -> Vec<String> {
    let mut out = Vec::new();
    dead_in(&p.body, &mut out);
    out
}

fn mentions(e: &ProgExpr, name: &str) -> bool {
    match e {
        ProgExpr::Seq(a, b) => mentions(a, name) || mentions(b, name),
        ProgExpr::Let { name: n, value, body } => mentions(value, name) || (n != name && mentions(body, name)),
        ProgExpr::Tactic(t) => t.terms().iter().any(|x| x.occurs(name)),
        ProgExpr::Ref(n) => n == name,
    }
}

fn dead_in(e: &ProgExpr, out: &mut Vec<String>) {
    match e {
        ProgExpr::Seq(..) => {
            let items = e.seq_items();
            for w in items.windows(2) {
                if w[1].ignores_current() {
                    out.push(format!("result of `{}` is discarded", describe(w[0])));
                }
            }
            for i in items {
                dead_in(i, out);
            }
        }
        ProgExpr::Let { name, value, body } => {
            if !mentions(body, name) {
                out.push(format!("let binding `{name}` is never used"));
            }
            dead_in(value, out);
            dead_in(body, out);
        }
        _ => {}
    }
}

fn describe(e: &ProgExpr) -> String {
    match e {
        ProgExpr::Tactic(t) => t.name().to_string(),
        ProgExpr::Ref(n) => n.clone(),
        ProgExpr::Let { name, .. } => format!("let {name}"),
        ProgExpr::Seq(..) => "sequence".into(),
    }
}
