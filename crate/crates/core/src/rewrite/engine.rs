use serde_json::json;

use crate::knowledge::{ErrorPattern, Hook, Rule, RuleSet};
use crate::terms::{render, Path, Signature, Term};

use super::hooks::apply_hook;
use super::{instantiate, match_term, Inst, RewriteError, TraceStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

/// Normalizes a proposition with `rs` and reads off its truth value.
pub fn eval_pred(rs: &RuleSet, p: &Term, inst: &Inst) -> Truth {
    match normalize(rs, p, inst) {
        Ok(t) if t.is_const("true") => Truth::True,
        Ok(t) if t.is_const("false") => Truth::False,
        _ => Truth::Unknown,
    }
}

fn conditions_hold(rs: &RuleSet, rule: &Rule, s: &super::Subst, inst: &Inst) -> bool {
    if rule.conditions.is_empty() {
        return true;
    }
    let fallback;
    let cond_rs = match &rs.conditions {
        Some(c) => c.as_ref(),
        None => {
            fallback = RuleSet::evaluator();
            &fallback
        }
    };
    rule.conditions
        .iter()
        .all(|c| eval_pred(cond_rs, &instantiate(c, s, inst), inst) == Truth::True)
}

/// Applies `rule` at the root of `t`, discharging its conditions with the
/// condition set of `rs`.
pub fn apply_rule(rs: &RuleSet, rule: &Rule, t: &Term, inst: &Inst) -> Option<Term> {
    let s = match_term(&rule.lhs, t, inst)?;
    if !conditions_hold(rs, rule, &s, inst) {
        return None;
    }
    let out = instantiate(&rule.rhs, &s, inst);
    (out != *t).then_some(out)
}

pub const FACT: &str = "#fact";

fn step_at(rs: &RuleSet, t: &Term, inst: &Inst) -> Option<(String, Term)> {
    if !t.is_const("true") && rs.facts.contains(t) {
        return Some((FACT.to_string(), Term::truth(true)));
    }
    for rule in &rs.rules {
        if let Some(out) = apply_rule(rs, rule, t, inst) {
            return Some((rule.name.clone(), out));
        }
    }
    for &h in &rs.hooks {
        if let Some(out) = apply_hook(h, t, inst) {
            return Some((h.trace_name().to_string(), out));
        }
    }
    None
}

fn apply_named(rs: &RuleSet, name: &str, t: &Term, inst: &Inst) -> Result<Option<Term>, RewriteError> {
    if name == FACT {
        return Ok(rs.facts.contains(t).then(|| Term::truth(true)));
    }
    if let Some(h) = Hook::from_trace_name(name) {
        return Ok(apply_hook(h, t, inst));
    }
    let rule = rs.rule(name).ok_or_else(|| RewriteError::UnknownRule(name.to_string()))?;
    Ok(apply_rule(rs, rule, t, inst))
}

/// Applies the rule (or `#hook`) called `name` at `path`.
pub fn rewrite_at(rs: &RuleSet, t: &Term, path: &[usize], name: &str, inst: &Inst) -> Result<Term, RewriteError> {
    let sub = t.subterm_at(path).map_err(|_| RewriteError::InvalidPath(path.to_vec()))?;
    match apply_named(rs, name, sub, inst)? {
        Some(new) => Ok(t.replace_at(path, new).expect("path checked above")),
        None => Err(RewriteError::NotApplicable { rule: name.to_string(), path: path.to_vec() }),
    }
}

/// Applies the rule called `name` once, at the leftmost-innermost position
/// where it fires.
pub fn rewrite_first(rs: &RuleSet, t: &Term, name: &str, inst: &Inst) -> Result<Option<TraceStep>, RewriteError> {
    for path in t.innermost_positions() {
        let sub = t.subterm_at(&path).expect("position of t");
        if let Some(after) = apply_named(rs, name, sub, inst)? {
            return Ok(Some(TraceStep { rule: name.to_string(), path, before: sub.clone(), after }));
        }
    }
    Ok(None)
}

struct Normalizer<'a> {
    rs: &'a RuleSet,
    inst: &'a Inst,
    steps: Vec<TraceStep>,
}

impl Normalizer<'_> {
    fn children(&mut self, t: Term, path: &mut Path) -> Result<Term, RewriteError> {
        match t {
            Term::App { head, args, meta } => {
                let head = if matches!(*head, Term::Const { .. }) {
                    head
                } else {
                    path.push(0);
                    let h = self.node(*head, path)?;
                    path.pop();
                    Box::new(h)
                };
                let mut out = Vec::with_capacity(args.len());
                for (i, a) in args.into_iter().enumerate() {
                    path.push(i + 1);
                    out.push(self.node(a, path)?);
                    path.pop();
                }
                Ok(Term::App { head, args: out, meta })
            }
            other => Ok(other),
        }
    }

    fn node(&mut self, t: Term, path: &mut Path) -> Result<Term, RewriteError> {
        let mut t = self.children(t, path)?;
        while let Some((rule, after)) = step_at(self.rs, &t, self.inst) {
            if self.steps.len() >= self.rs.max_steps {
                return Err(RewriteError::StepBudgetExceeded(self.rs.max_steps));
            }
            self.steps.push(TraceStep { rule, path: path.clone(), before: t, after: after.clone() });
            t = self.children(after, path)?;
        }
        Ok(t)
    }
}

/// Leftmost-innermost normalization with its trace.
pub fn normalize_steps(rs: &RuleSet, t: &Term, inst: &Inst) -> Result<(Term, Vec<TraceStep>), RewriteError> {
    let mut n = Normalizer { rs, inst, steps: Vec::new() };
    let out = n.node(t.clone(), &mut Vec::new())?;
    Ok((out, n.steps))
}

pub fn normalize(rs: &RuleSet, t: &Term, inst: &Inst) -> Result<Term, RewriteError> {
    normalize_steps(rs, t, inst).map(|(t, _)| t)
}

/// Replays a trace from `start` with [`rewrite_at`], checking every step.
pub fn replay(rs: &RuleSet, start: &Term, trace: &[TraceStep], inst: &Inst) -> Result<Term, RewriteError> {
    let mut cur = start.clone();
    for (i, step) in trace.iter().enumerate() {
        if cur.subterm_at(&step.path).ok() != Some(&step.before) {
            return Err(RewriteError::ReplayMismatch(i));
        }
        let next = rewrite_at(rs, &cur, &step.path, &step.rule, inst).map_err(|_| RewriteError::ReplayMismatch(i))?;
        if next.subterm_at(&step.path).ok() != Some(&step.after) {
            return Err(RewriteError::ReplayMismatch(i));
        }
        cur = next;
    }
    Ok(cur)
}

/// Finds an error pattern explaining the step from `before` to `after`:
/// one application of the pattern somewhere in `before` yields `after`,
/// either literally or after normalizing both with `norm`.
pub fn detect_error_pattern<'a>(
    patterns: &'a [ErrorPattern],
    before: &Term,
    after: &Term,
    norm: Option<&RuleSet>,
    inst: &Inst,
) -> Option<&'a ErrorPattern> {
    let target = norm.and_then(|rs| normalize(rs, after, inst).ok());
    for pat in patterns {
        for path in before.positions() {
            let sub = before.subterm_at(&path).expect("position of before");
            let Some(s) = match_term(&pat.lhs, sub, inst) else { continue };
            let candidate = before.replace_at(&path, instantiate(&pat.rhs, &s, inst)).expect("valid path");
            if candidate == *after {
                return Some(pat);
            }
            if let (Some(rs), Some(target)) = (norm, &target) {
                if normalize(rs, &candidate, inst).ok().as_ref() == Some(target) {
                    return Some(pat);
                }
            }
        }
    }
    None
}

/// One JSON object per line: `rule`, `path`, `before`, `after`.
pub fn trace_json_lines(trace: &[TraceStep], sig: &Signature) -> String {
    let mut out = String::new();
    for s in trace {
        let line = json!({
            "rule": s.rule,
            "path": s.path,
            "before": render(&s.before, sig),
            "after": render(&s.after, sig),
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{parse, Type};
    use std::sync::Arc;

    fn sig() -> Signature {
        let mut s = Signature::standard();
        for f in ["sin", "cos"] {
            s.declare(f, Type::parse("Real => Real").unwrap());
        }
        s
    }

    fn p(src: &str) -> Term {
        parse(src, &sig()).unwrap().stripped()
    }

    fn rule(name: &str, lhs: &str, rhs: &str, conds: &[&str]) -> Rule {
        Rule { name: name.into(), lhs: p(lhs), rhs: p(rhs), conditions: conds.iter().map(|c| p(c)).collect() }
    }

    fn bdv_x() -> Inst {
        let mut inst = Inst::new();
        inst.insert("bdv".into(), Term::var("x"));
        inst
    }

    #[test]
    fn chain_rule_matches_with_fixed_bdv() {
        let r = rule("diff_sin", "d/dbdv sin u", "cos u * d/dbdv u", &[]);
        let t = p("d/dx sin(x ^ 2)");
        let s = match_term(&r.lhs, &t, &bdv_x()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s["u"], p("x ^ 2"));
        let rs = RuleSet::new("d", vec![r.clone()], vec![]);
        assert_eq!(apply_rule(&rs, &r, &t, &bdv_x()), Some(p("cos(x ^ 2) * d/dx x ^ 2")));
        assert!(match_term(&r.lhs, &p("d/dy sin(y)"), &bdv_x()).is_none());
    }

    #[test]
    fn nonlinear_patterns_bind_consistently() {
        let lhs = p("a - a");
        assert!(match_term(&lhs, &p("x - x"), &Inst::new()).is_some());
        assert!(match_term(&lhs, &p("x - y"), &Inst::new()).is_none());
    }

    #[test]
    fn failed_condition_blocks_rule() {
        let rs = RuleSet::new("c", vec![rule("cancel", "a / a", "1", &["a ~= 0"])], vec![Hook::Arith]);
        assert_eq!(normalize(&rs, &p("0 / 0"), &Inst::new()).unwrap(), p("0 / 0"));
        assert_eq!(normalize(&rs, &p("3 / 3"), &Inst::new()).unwrap(), p("1"));
        assert_eq!(normalize(&rs, &p("z / z"), &Inst::new()).unwrap(), p("z / z"));
        let facts = RuleSet::new("f", vec![rule("z_nonzero", "z ~= 0", "true", &[])], vec![Hook::Arith]);
        let mut rs = rs;
        rs.conditions = Some(Arc::new(facts));
        assert_eq!(normalize(&rs, &p("z / z"), &Inst::new()).unwrap(), p("1"));
    }

    #[test]
    fn looping_rules_hit_the_budget() {
        let mut rs =
            RuleSet::new("loop", vec![rule("add0", "x", "x + 0", &[]), rule("drop0", "x + 0", "x", &[])], vec![]);
        rs.max_steps = 50;
        assert_eq!(normalize(&rs, &p("y"), &Inst::new()), Err(RewriteError::StepBudgetExceeded(50)));
    }

    #[test]
    fn trace_replays_to_result() {
        let rs = RuleSet::new(
            "d",
            vec![
                rule("diff_sum", "d/dbdv (u + v)", "d/dbdv u + d/dbdv v", &[]),
                rule("diff_sin", "d/dbdv sin u", "cos u * d/dbdv u", &[]),
                rule("diff_var", "d/dbdv bdv", "1", &[]),
            ],
            vec![Hook::Arith, Hook::OrderProduct],
        );
        let t = p("d/dx (x + sin(x))");
        let (out, trace) = normalize_steps(&rs, &t, &bdv_x()).unwrap();
        assert_eq!(out, p("1 + cos x"));
        assert_eq!(trace[0].rule, "diff_sum");
        assert_eq!(trace[0].path, Vec::<usize>::new());
        assert_eq!(replay(&rs, &t, &trace, &bdv_x()).unwrap(), out);
        let lines = trace_json_lines(&trace, &sig());
        assert_eq!(lines.lines().count(), trace.len());
        let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
        assert_eq!(first["before"], "d/dx (x + sin x)");
    }

    #[test]
    fn rewrite_at_reports_inapplicable_rules() {
        let rs = RuleSet::new("d", vec![rule("diff_var", "d/dbdv bdv", "1", &[])], vec![]);
        let t = p("d/dx x + d/dx sin(x)");
        assert_eq!(rewrite_at(&rs, &t, &[1], "diff_var", &bdv_x()).unwrap(), p("1 + d/dx sin(x)"));
        assert!(matches!(
            rewrite_at(&rs, &t, &[2], "diff_var", &bdv_x()),
            Err(RewriteError::NotApplicable { .. })
        ));
        assert!(matches!(rewrite_at(&rs, &t, &[7], "diff_var", &bdv_x()), Err(RewriteError::InvalidPath(_))));
        assert!(matches!(rewrite_at(&rs, &t, &[], "nope", &bdv_x()), Err(RewriteError::UnknownRule(_))));
    }

    #[test]
    fn error_pattern_is_recognised() {
        let pats = vec![ErrorPattern {
            id: "chain_forgotten".into(),
            lhs: p("d/dbdv sin u"),
            rhs: p("cos u"),
            feedback: "inner derivative missing".into(),
        }];
        let before = p("d/dx x + d/dx sin(x ^ 2)");
        let after = p("d/dx x + cos(x ^ 2)");
        assert_eq!(detect_error_pattern(&pats, &before, &after, None, &bdv_x()).map(|e| e.id.as_str()), Some("chain_forgotten"));
        assert!(detect_error_pattern(&pats, &before, &before, None, &bdv_x()).is_none());
    }
}
