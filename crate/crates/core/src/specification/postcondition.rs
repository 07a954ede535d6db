use std::collections::BTreeMap;

use super::{descriptor, ProblemInstance, SpecError};
use crate::knowledge::{KnowledgeBase, RuleSet};
use crate::rewrite::{eval_pred, normalize, Inst, RewriteError, Truth};
use crate::terms::Term;

/// A function definition `f x = body`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunDef {
    pub name: String,
    pub param: String,
    pub body: Term,
}

impl FunDef {
    pub fn from_equation(t: &Term) -> Option<FunDef> {
        let (l, r) = t.as_equation()?;
        let name = l.head_var()?;
        match l.args() {
            [p] => Some(FunDef { name: name.to_string(), param: p.var_name()?.to_string(), body: r.clone() }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostCheck {
    pub truth: Truth,
    /// Relate items shown to be false.
    pub failed: Vec<Term>,
    pub reason: Option<String>,
}

/// Closed forms of defined functions, computed on demand.
pub struct Unfolder<'a> {
    defs: Vec<FunDef>,
    rs: &'a RuleSet,
    closed: BTreeMap<String, Term>,
    active: Vec<String>,
}

impl<'a> Unfolder<'a> {
    /// Earlier definitions of a name shadow later ones.
    pub fn new(defs: Vec<FunDef>, rs: &'a RuleSet) -> Unfolder<'a> {
        let mut uniq: Vec<FunDef> = Vec::new();
        for d in defs {
            if !uniq.iter().any(|u| u.name == d.name) {
                uniq.push(d);
            }
        }
        Unfolder { defs: uniq, rs, closed: BTreeMap::new(), active: Vec::new() }
    }

    fn closed_form(&mut self, name: &str) -> Result<Option<(String, Term)>, RewriteError> {
        let Some(d) = self.defs.iter().find(|d| d.name == name).cloned() else { return Ok(None) };
        if let Some(c) = self.closed.get(name) {
            return Ok(Some((d.param, c.clone())));
        }
        if self.active.iter().any(|a| a == name) {
            return Ok(None);
        }
        self.active.push(name.to_string());
        let body = self.unfold(&d.body);
        self.active.pop();
        let inst = Inst::from([("bdv".to_string(), Term::var(&d.param))]);
        let c = normalize(self.rs, &body?, &inst)?;
        self.closed.insert(name.to_string(), c.clone());
        Ok(Some((d.param, c)))
    }

    /// Replaces every application of a defined function by its closed form.
    pub fn unfold(&mut self, t: &Term) -> Result<Term, RewriteError> {
        let Term::App { head, args, .. } = t else { return Ok(t.clone()) };
        let args = args.iter().map(|a| self.unfold(a)).collect::<Result<Vec<_>, _>>()?;
        if let (Some(f), [a]) = (head.var_name(), args.as_slice()) {
            if let Some((p, c)) = self.closed_form(f)? {
                return Ok(c.substitute(&BTreeMap::from([(p, a.clone())])));
            }
        }
        Ok(Term::app((**head).clone(), args))
    }
}

/// Built from numerals and variables by `+`, `*` and powers with numeral
/// exponents.
fn is_plain_polynomial(t: &Term) -> bool {
    match t {
        Term::Num { .. } | Term::Var { .. } => true,
        _ if t.is_numeral() => true,
        Term::App { args, .. } => match (t.head_name(), args.as_slice()) {
            (Some("+" | "*"), [a, b]) => is_plain_polynomial(a) && is_plain_polynomial(b),
            (Some("^"), [a, n]) => n.is_numeral() && is_plain_polynomial(a),
            _ => false,
        },
        _ => false,
    }
}

fn relate_props(inst: &ProblemInstance) -> Vec<Term> {
    let mut out = Vec::new();
    for item in &inst.formalisation.relate {
        let arg = descriptor(item).map(|(_, a)| a).unwrap_or(item);
        match arg.as_list() {
            Some(items) => out.extend(items.iter().cloned()),
            None => out.push(arg.clone()),
        }
    }
    out
}

/// Substitutes the solution into the instance's Relate items. `solution`
/// maps each Find variable to a value or to a definition `y x = ...`;
/// `context` holds further definitions, and the theory's definitions of
/// derived functions are used last.
pub fn check_postcondition(
    kb: &KnowledgeBase,
    inst: &ProblemInstance,
    solution: &BTreeMap<String, Term>,
    context: &[Term],
) -> Result<PostCheck, SpecError> {
    let mut defs = Vec::new();
    let mut plain: Vec<(String, Term)> = Vec::new();
    for item in &inst.formalisation.find {
        let Some(v) = descriptor(item).and_then(|(_, a)| a.var_name()) else { continue };
        let val = solution.get(v).ok_or_else(|| SpecError::MissingArgument(v.to_string()))?;
        match FunDef::from_equation(val) {
            Some(d) if d.name == v => defs.push(d),
            _ => plain.push((v.to_string(), val.clone())),
        }
    }
    defs.extend(context.iter().filter_map(FunDef::from_equation));
    defs.extend(kb.definitions.values().filter_map(|d| FunDef::from_equation(&d.definition.formal)));
    let props = relate_props(inst);
    if props.is_empty() {
        return Ok(PostCheck { truth: Truth::True, failed: Vec::new(), reason: None });
    }
    let Some(rs) = kb.rule_set("differentiate").or_else(|| kb.rule_set("make_polynomial")) else {
        return Ok(PostCheck { truth: Truth::Unknown, failed: Vec::new(), reason: Some("no simplifier in the KB".into()) });
    };
    let rs = rs.with_facts(&inst.assumptions);
    let prover = kb.prover().with_facts(&inst.assumptions);
    let mut unf = Unfolder::new(defs, &rs);
    let mut truth = Truth::True;
    let mut failed = Vec::new();
    let mut reason = None;
    let none = Inst::new();
    for p in props {
        let mut p = p;
        for (v, val) in &plain {
            p = p.substitute(&BTreeMap::from([(v.clone(), val.clone())]));
        }
        let verdict = (|| -> Result<Truth, RewriteError> {
            let q = unf.unfold(&p)?;
            if let Some((l, r)) = q.as_equation() {
                let diff = Term::binop("+", l.clone(), Term::binop("*", Term::int(-1), r.clone()));
                let d = normalize(&rs, &diff, &none)?;
                return Ok(if d.is_zero() {
                    Truth::True
                } else if is_plain_polynomial(&d) {
                    Truth::False
                } else {
                    Truth::Unknown
                });
            }
            Ok(eval_pred(&prover, &q, &none))
        })();
        match verdict {
            Ok(Truth::True) => {}
            Ok(Truth::False) => {
                failed.push(p);
                truth = Truth::False;
            }
            Ok(Truth::Unknown) => {
                if truth == Truth::True {
                    truth = Truth::Unknown;
                }
            }
            Err(e) => {
                if truth == Truth::True {
                    truth = Truth::Unknown;
                }
                reason.get_or_insert(e.to_string());
            }
        }
    }
    Ok(PostCheck { truth, failed, reason })
}
