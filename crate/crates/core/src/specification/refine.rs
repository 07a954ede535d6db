use std::collections::VecDeque;

use super::{descriptor, Field, Model, ProblemInstance, ProblemNode, SpecError};
use crate::knowledge::{KnowledgeBase, RuleSet};
use crate::program::{key_id, Key};
use crate::rewrite::{eval_pred, instantiate, match_term, Inst, Subst, Truth};
use crate::terms::Term;

/// Binds the pattern variables of `pattern` by matching its descriptor items
/// against those of `model`, field by field. Where-clauses are ignored.
pub fn match_pattern(pattern: &Model, model: &Model) -> Option<Subst> {
    let none = Inst::new();
    let mut s = Subst::new();
    for f in [Field::Given, Field::Find, Field::Relate] {
        let items = model.field(f);
        let mut used = vec![false; items.len()];
        for p in pattern.field(f) {
            let (d, parg) = descriptor(p)?;
            let parg = instantiate(parg, &s, &none);
            let hit = items.iter().enumerate().find_map(|(i, it)| {
                if used[i] {
                    return None;
                }
                let (d2, arg) = descriptor(it)?;
                if d2 != d {
                    return None;
                }
                match_term(&parg, arg, &none).map(|m| (i, m))
            });
            let (i, m) = hit?;
            used[i] = true;
            s.extend(m);
        }
    }
    Some(s)
}

/// Evaluates instantiated where-clauses; the first clause that is not true
/// is returned with its truth value.
pub fn eval_where(prover: &RuleSet, clauses: &[Term], s: &Subst) -> Result<(), (Term, Truth)> {
    let none = Inst::new();
    for c in clauses {
        let c = instantiate(c, s, &none);
        match eval_pred(prover, &c, &none) {
            Truth::True => {}
            t => return Err((c, t)),
        }
    }
    Ok(())
}

/// Pattern match plus all (inherited) where-clauses true.
pub fn problem_matches(node: &ProblemNode, model: &Model, prover: &RuleSet) -> Option<Subst> {
    let s = match_pattern(&node.model, model)?;
    eval_where(prover, &node.model.where_, &s).ok().map(|_| s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub key: Key,
    pub bindings: Subst,
    /// Every node tested, in breadth-first order, with its outcome.
    pub visited: Vec<(Key, bool)>,
}

/// Breadth-first descent from `root`: children of matching nodes are
/// tested in file order and the first match of each level is followed.
pub fn refine(kb: &KnowledgeBase, inst: &ProblemInstance, root: &[String]) -> Result<Refinement, SpecError> {
    let start = kb.problem(&key_id(root)).ok_or_else(|| SpecError::not_found("problem", &key_id(root)))?;
    let prover = kb.prover().with_facts(&inst.assumptions);
    let model = &inst.formalisation;
    let mut visited = Vec::new();
    let Some(mut bindings) = problem_matches(start, model, &prover) else {
        return Err(SpecError::NoMatch(start.key.clone()));
    };
    visited.push((start.key.clone(), true));
    let mut best = start;
    let mut queue: VecDeque<&ProblemNode> = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        for ck in &node.children {
            let Some(child) = kb.problem_by_key(ck) else { continue };
            let m = problem_matches(child, model, &prover);
            visited.push((child.key.clone(), m.is_some()));
            if let Some(s) = m {
                best = child;
                bindings = s;
                queue.push_back(child);
                break;
            }
        }
    }
    Ok(Refinement { key: best.key.clone(), bindings, visited })
}
