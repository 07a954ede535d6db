use serde::Serialize;

use super::exec::{checker, execute, resolve_tactic};
use super::state::{InterpState, StepProposal};
use super::tree::{assign_ids, CalcItem, Step};
use super::InterpError;
use crate::knowledge::KnowledgeBase;
use crate::program::{parse_tactic, Tactic};
use crate::rewrite::{detect_error_pattern, normalize_steps, Inst};
use crate::terms::{render, Term};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorHint {
    pub id: String,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum InputOutcome {
    /// The input equals the result of the `steps`-th next program step.
    Accepted { id: String, steps: usize },
    /// The input is equivalent to the current term; the program does not
    /// move on.
    Equivalent { id: String },
    Rejected { reason: String, hint: Option<ErrorHint> },
}

impl InputOutcome {
    pub fn is_accepted(&self) -> bool {
        !matches!(self, InputOutcome::Rejected { .. })
    }
}

fn same(kb: &KnowledgeBase, check: Option<&str>, ctx: &[Term], a: &Term, b: &Term) -> bool {
    let rs = checker(kb, check, ctx);
    let inst = Inst::new();
    match (normalize_steps(&rs, a, &inst), normalize_steps(&rs, b, &inst)) {
        (Ok((x, _)), Ok((y, _))) => x == y,
        _ => false,
    }
}

/// Runs up to `lookahead` steps on a copy of the state and returns the
/// copy together with the proposals up to the first one `hit` accepts.
fn search(
    state: &InterpState,
    kb: &KnowledgeBase,
    mut hit: impl FnMut(&InterpState, &StepProposal) -> bool,
) -> Option<(InterpState, Vec<StepProposal>)> {
    let mut sim = state.clone();
    let mut seen = Vec::new();
    for _ in 0..state.lookahead {
        let Ok(p) = sim.next_step(kb) else { return None };
        let ok = hit(&sim, &p);
        seen.push(p);
        if ok {
            return Some((sim, seen));
        }
    }
    None
}

/// Folds the steps a simulation added into the tree: a single step takes
/// the input, several trailing steps of one block become the detail of a
/// new step, and earlier steps elsewhere are marked as done by the system.
fn adopt(state: &mut InterpState, mut sim: InterpState, seen: &[StepProposal], input: &str) -> String {
    let last = seen.last().expect("at least one step");
    let before = state.tree.root.block_at(&last.block).map(|b| b.solution.len()).unwrap_or(0);
    for p in &seen[..seen.len() - 1] {
        if p.block != last.block || p.index < before {
            if let Some(CalcItem::Step(s)) = sim.tree.root.block_at_mut(&p.block).and_then(|b| b.solution.get_mut(p.index)) {
                s.auto = true;
            }
        }
    }
    let b = sim.tree.root.block_at_mut(&last.block).expect("block of the last step");
    let id;
    if last.index == before {
        if let CalcItem::Step(s) = &mut b.solution[last.index] {
            s.input = Some(input.to_string());
        }
        id = last.id.clone();
    } else {
        let detail: Vec<CalcItem> = b.solution.drain(before..).collect();
        let term = detail.last().and_then(|i| i.result()).unwrap_or_default().to_string();
        id = b.item_id(before);
        let mut item = CalcItem::Step(Step {
            id: String::new(),
            tactic: None,
            rule: None,
            check: None,
            input: Some(input.to_string()),
            term,
            detail,
            auto: false,
        });
        assign_ids(&mut item, id.clone());
        b.solution.push(item);
    }
    *state = sim;
    id
}

/// Checks a term typed by the user against the next program steps and,
/// failing that, against the current term.
pub fn check_input_term(state: &mut InterpState, kb: &KnowledgeBase, input: &Term) -> Result<InputOutcome, InterpError> {
    let sig = &kb.signature;
    let text = render(input, sig);
    let found = search(state, kb, |v, p| match &p.term {
        Some(t) => same(kb, p.check.as_deref(), &v.top().ctx, t, input),
        None => false,
    });
    if let Some((sim, seen)) = found {
        let steps = seen.len();
        let id = adopt(state, sim, &seen, &text);
        return Ok(InputOutcome::Accepted { id, steps });
    }
    if state.done {
        return Ok(InputOutcome::Rejected { reason: "the calculation is finished".into(), hint: None });
    }
    let f = state.top().clone();
    let Some(cur) = f.cur.clone() else {
        return Ok(InputOutcome::Rejected { reason: "the next step does not lead to this term".into(), hint: None });
    };
    let rs = checker(kb, f.check.as_deref(), &f.ctx);
    let inst = Inst::new();
    let norm = |t: &Term| normalize_steps(&rs, t, &inst).ok();
    let (nc, ni) = (norm(&cur), norm(input));
    if nc.is_some() && nc.as_ref().map(|x| &x.0) == ni.as_ref().map(|x| &x.0) {
        let set = f.check.clone().unwrap_or_else(|| "make_polynomial".to_string());
        let b = state.tree.root.block_at_mut(&f.block).expect("frame block");
        let id = b.item_id(b.solution.len());
        let mut item = CalcItem::Step(Step {
            id: String::new(),
            tactic: None,
            rule: None,
            check: Some(set.clone()),
            input: Some(text.clone()),
            term: text,
            detail: Vec::new(),
            auto: false,
        });
        assign_ids(&mut item, id.clone());
        b.solution.push(item);
        state.top_mut().cur = Some(input.clone());
        return Ok(InputOutcome::Equivalent { id });
    }
    let hint = detect_error_pattern(&kb.error_patterns, &cur, input, Some(&rs), &inst)
        .map(|p| ErrorHint { id: p.id.clone(), feedback: p.feedback.clone() });
    Ok(InputOutcome::Rejected { reason: "the term does not follow from the current one".into(), hint })
}

fn same_call(a: &Tactic, b: &Tactic) -> bool {
    match (a, b) {
        (Tactic::SubProblem { problem: p, method: m, .. }, Tactic::SubProblem { problem: q, method: n, .. }) => p == q && m == n,
        _ => false,
    }
}

/// Checks a tactic typed by the user. It has to apply to the current term
/// and agree with one of the next program steps.
pub fn check_input_tactic(state: &mut InterpState, kb: &KnowledgeBase, text: &str) -> Result<InputOutcome, InterpError> {
    let parsed = parse_tactic(text, &kb.signature)?;
    let tac = resolve_tactic(&parsed, &state.top().env);
    let shown = tac.render(&kb.signature);
    let found = if matches!(tac, Tactic::SubProblem { .. }) {
        search(state, kb, |_, p| same_call(&p.tactic, &tac))
    } else {
        let f = state.top();
        let ex = execute(kb, &tac, f.cur.as_ref(), &f.ctx)?;
        search(state, kb, |v, p| {
            p.tactic.name() == tac.name()
                && p.term.as_ref().is_some_and(|t| *t == ex.term || same(kb, p.check.as_deref(), &v.top().ctx, t, &ex.term))
        })
    };
    match found {
        Some((sim, seen)) => {
            let steps = seen.len();
            let id = adopt(state, sim, &seen, &shown);
            Ok(InputOutcome::Accepted { id, steps })
        }
        None => Ok(InputOutcome::Rejected { reason: format!("{shown} is not among the next steps"), hint: None }),
    }
}
