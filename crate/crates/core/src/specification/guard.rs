use std::collections::BTreeMap;

use serde::Serialize;

use super::{descriptor, eval_where, SpecError};
use crate::knowledge::KnowledgeBase;
use crate::program::key_id;
use crate::rewrite::{Subst, Truth};
use crate::terms::{Term, Type};

/// A program parameter together with the model item it is read from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormalArg {
    pub name: String,
    #[serde(serialize_with = "ser_type")]
    pub ty: Type,
    pub descriptor: String,
    /// Variable of the guard's model pattern, such as `q_q`.
    pub pattern_var: String,
    pub given: bool,
}

fn ser_type<S: serde::Serializer>(t: &Type, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

pub fn formal_args(kb: &KnowledgeBase, method: &[String]) -> Result<Vec<FormalArg>, SpecError> {
    let m = kb.method(method).ok_or_else(|| SpecError::not_found("method", &key_id(method)))?;
    let p = &m.program;
    let guard = kb.problem_by_key(&p.guard).ok_or_else(|| SpecError::not_found("problem", &key_id(&p.guard)))?;
    let ngiven = guard.model.given.len();
    Ok(p.params
        .iter()
        .zip(guard.model.interface())
        .enumerate()
        .map(|(i, ((name, ty), item))| {
            let (d, arg) = descriptor(item).unwrap_or(("", item));
            FormalArg {
                name: name.clone(),
                ty: ty.clone(),
                descriptor: d.to_string(),
                pattern_var: arg.var_name().unwrap_or_default().to_string(),
                given: i < ngiven,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardOutcome {
    pub truth: Truth,
    /// The first where-clause, instantiated, that is not true.
    pub failing: Option<Term>,
}

/// Evaluates the where-clauses of the method's guard with the parameters
/// bound by `env` and `facts` assumed.
pub fn check_guard(
    kb: &KnowledgeBase,
    method: &[String],
    env: &BTreeMap<String, Term>,
    facts: &[Term],
) -> Result<GuardOutcome, SpecError> {
    let args = formal_args(kb, method)?;
    let m = kb.method(method).ok_or_else(|| SpecError::not_found("method", &key_id(method)))?;
    let guard = kb.problem_by_key(&m.program.guard).ok_or_else(|| SpecError::not_found("problem", &key_id(&m.program.guard)))?;
    let mut s = Subst::new();
    for a in &args {
        match env.get(&a.name) {
            Some(v) => {
                s.insert(a.pattern_var.clone(), v.clone());
            }
            None if a.given => return Err(SpecError::MissingArgument(a.name.clone())),
            None => {}
        }
    }
    let prover = kb.prover().with_facts(facts);
    Ok(match eval_where(&prover, &guard.model.where_, &s) {
        Ok(()) => GuardOutcome { truth: Truth::True, failing: None },
        Err((c, t)) => GuardOutcome { truth: t, failing: Some(c) },
    })
}
