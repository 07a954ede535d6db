//! Conditional term rewriting with traces.

mod engine;
mod hooks;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::terms::{Path, Term, DERIV};

pub use engine::{
    FACT,
    apply_rule, detect_error_pattern, eval_pred, normalize, normalize_steps, replay, rewrite_at, rewrite_first,
    trace_json_lines, Truth,
};
pub use hooks::{apply_hook, degree};

/// Fixed bindings of a rule set instantiation, e.g. `bdv` to `x`.
pub type Inst = BTreeMap<String, Term>;
pub type Subst = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewriteError {
    #[error("step budget of {0} rewrites exceeded")]
    StepBudgetExceeded(usize),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("rule `{rule}` does not apply at {path:?}")]
    NotApplicable { rule: String, path: Path },
    #[error("invalid path {0:?}")]
    InvalidPath(Path),
    #[error("trace step {0} does not replay")]
    ReplayMismatch(usize),
}

/// One rewrite: which rule fired where, and the subterm before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub rule: String,
    pub path: Path,
    pub before: Term,
    pub after: Term,
}

/// Syntactic matching of `pat` against `t`. Variables bound in `inst`
/// are fixed; all other pattern variables are bound consistently.
pub fn match_term(pat: &Term, t: &Term, inst: &Inst) -> Option<Subst> {
    let mut s = Subst::new();
    matches(pat, t, inst, &mut s).then_some(s)
}

fn matches(pat: &Term, t: &Term, inst: &Inst, s: &mut Subst) -> bool {
    match pat {
        Term::Var { name, .. } => {
            if let Some(fixed) = inst.get(name) {
                return fixed == t;
            }
            match s.get(name) {
                Some(bound) => bound == t,
                None => {
                    s.insert(name.clone(), t.clone());
                    true
                }
            }
        }
        Term::Const { .. } | Term::Num { .. } => pat == t,
        Term::App { head, args, .. } => match t {
            Term::App { head: th, args: ta, .. } => {
                if args.len() != ta.len() {
                    return false;
                }
                if head.is_const(DERIV) && !th.is_const(DERIV) {
                    return false;
                }
                matches(head, th, inst, s) && args.iter().zip(ta).all(|(p, a)| matches(p, a, inst, s))
            }
            _ => false,
        },
    }
}

/// Applies a match to a rule side: pattern bindings plus the instantiation.
/// Unlike [`Term::substitute`] this also replaces derivative variables.
pub fn instantiate(t: &Term, s: &Subst, inst: &Inst) -> Term {
    match t {
        Term::Var { name, .. } => s.get(name).or_else(|| inst.get(name)).cloned().unwrap_or_else(|| t.clone()),
        Term::App { head, args, .. } => {
            Term::app(instantiate(head, s, inst), args.iter().map(|a| instantiate(a, s, inst)).collect())
        }
        _ => t.clone(),
    }
}
