use std::collections::BTreeMap;
use std::sync::Arc;

use num::Signed;

use super::linsys::solve_linear_system;
use super::InterpError;
use crate::knowledge::{Hook, KnowledgeBase, RuleSet};
use crate::program::Tactic;
use crate::rewrite::{instantiate, normalize, normalize_steps, rewrite_first, Inst, Subst, TraceStep};
use crate::specification::FunDef;
use crate::terms::Term;

/// Result of running one tactic.
#[derive(Debug, Clone)]
pub struct Executed {
    pub term: Term,
    /// Individual rewrites, for `Rewrite` and `Rewrite_Set`.
    pub trace: Vec<TraceStep>,
}

fn selectors() -> RuleSet {
    RuleSet::new("#resolve", Vec::new(), vec![Hook::Predicates])
}

/// Replaces bound names by their values and evaluates selectors such as
/// `last` and `rhs`.
pub fn resolve(t: &Term, env: &Subst) -> Term {
    let t = instantiate(t, env, &Inst::new());
    normalize(&selectors(), &t, &Inst::new()).unwrap_or(t)
}

pub fn resolve_tactic(tac: &Tactic, env: &Subst) -> Tactic {
    tac.map_terms(&mut |t| resolve(t, env))
}

pub fn inst_of(pairs: &[(String, Term)]) -> Inst {
    pairs.iter().cloned().collect()
}

/// Facts `b ~= 0` for every symbolic denominator or negative power in `t`.
pub fn denominators(t: &Term, out: &mut Vec<Term>) {
    if let Term::App { args, .. } = t {
        let den = match (t.head_name(), args.as_slice()) {
            (Some("/"), [_, b]) if !b.is_numeral() => Some(b),
            (Some("^"), [b, n]) if !b.is_numeral() && n.as_numeral().is_some_and(|v| v.is_negative()) => Some(b),
            _ => None,
        };
        if let Some(b) = den {
            let f = Term::binop("~=", b.clone(), Term::int(0));
            if !out.contains(&f) {
                out.push(f);
            }
        }
        for a in args {
            denominators(a, out);
        }
    }
}

fn replace_fun(t: &Term, d: &FunDef) -> Term {
    match t {
        Term::App { head, args, .. } => {
            let args: Vec<Term> = args.iter().map(|a| replace_fun(a, d)).collect();
            if head.var_name() == Some(d.name.as_str()) && args.len() == 1 {
                return d.body.substitute(&BTreeMap::from([(d.param.clone(), args[0].clone())]));
            }
            Term::app(replace_fun(head, d), args)
        }
        _ => t.clone(),
    }
}

/// Applies equations `x = v` and definitions `f x = e` to `t`.
pub fn substitute(t: &Term, eqs: &Term) -> Result<Term, InterpError> {
    let items: Vec<Term> = match eqs.as_list() {
        Some(xs) => xs.to_vec(),
        None => vec![eqs.clone()],
    };
    let mut out = t.clone();
    for e in &items {
        if let Some(d) = FunDef::from_equation(e) {
            out = replace_fun(&out, &d);
            continue;
        }
        match e.as_equation() {
            Some((Term::Var { name, .. }, v)) => out = out.substitute(&BTreeMap::from([(name.clone(), v.clone())])),
            _ => return Err(InterpError::not_applicable("Substitute", "expected equations `x = v` or `f x = e`")),
        }
    }
    Ok(out)
}

fn rule_set(kb: &KnowledgeBase, name: &str, ctx: &[Term]) -> Result<Arc<RuleSet>, InterpError> {
    let rs = kb.rule_set(name).ok_or_else(|| InterpError::not_applicable("Rewrite_Set", &format!("unknown rule set `{name}`")))?;
    Ok(Arc::new(rs.with_facts(ctx)))
}

/// Rule set deciding equality of terms for a method.
pub fn checker(kb: &KnowledgeBase, check: Option<&str>, ctx: &[Term]) -> Arc<RuleSet> {
    let rs = check
        .and_then(|c| kb.rule_set(c))
        .or_else(|| kb.rule_set("make_polynomial"))
        .unwrap_or_else(|| Arc::new(RuleSet::evaluator()));
    Arc::new(rs.with_facts(ctx))
}

/// Runs an already resolved tactic on the current term.
pub fn execute(kb: &KnowledgeBase, tac: &Tactic, cur: Option<&Term>, ctx: &[Term]) -> Result<Executed, InterpError> {
    let need = || cur.cloned().ok_or(InterpError::NoCurrentTerm);
    let plain = |term| Ok(Executed { term, trace: Vec::new() });
    match tac {
        Tactic::Take(t) => plain(t.clone()),
        Tactic::Substitute(eqs) => {
            let c = need()?;
            let out = substitute(&c, eqs)?;
            if out == c {
                return Err(InterpError::not_applicable("Substitute", "nothing to substitute"));
            }
            plain(out)
        }
        Tactic::Rewrite { rule, inst } => {
            let c = need()?;
            let r = kb.rule(rule).ok_or_else(|| InterpError::not_applicable("Rewrite", &format!("unknown rule `{rule}`")))?;
            let mut rs = RuleSet::new(rule, vec![r.clone()], Vec::new());
            rs.conditions = Some(Arc::new(kb.prover().with_facts(ctx)));
            match rewrite_first(&rs, &c, rule, &inst_of(inst))? {
                Some(step) => {
                    let term = c.replace_at(&step.path, step.after.clone()).expect("path from rewrite");
                    Ok(Executed { term, trace: vec![step] })
                }
                None => Err(InterpError::not_applicable("Rewrite", &format!("`{rule}` does not apply"))),
            }
        }
        Tactic::RewriteSet { set, inst } => {
            let c = need()?;
            let rs = rule_set(kb, set, ctx)?;
            let (term, trace) = normalize_steps(&rs, &c, &inst_of(inst))?;
            Ok(Executed { term, trace })
        }
        Tactic::SolveSystem { equations, unknowns } => {
            let eqs: Vec<Term> = match equations.as_list() {
                Some(xs) => xs.to_vec(),
                None => vec![equations.clone()],
            };
            let us: Vec<String> = unknowns
                .as_list()
                .ok_or_else(|| InterpError::not_applicable("solveSystem", "unknowns must be a list"))?
                .iter()
                .map(|u| u.var_name().map(str::to_string))
                .collect::<Option<_>>()
                .ok_or_else(|| InterpError::not_applicable("solveSystem", "unknowns must be variables"))?;
            let rs = checker(kb, Some("make_polynomial"), ctx);
            let sol = solve_linear_system(&eqs, &us, &rs)?;
            plain(Term::list(sol.into_iter().map(|(u, v)| Term::eq(Term::var(&u), v)).collect()))
        }
        Tactic::SubProblem { .. } => Err(InterpError::not_applicable("SubProblem", "sub-problems open a new block")),
    }
}
