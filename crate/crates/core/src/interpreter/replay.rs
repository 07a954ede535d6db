use std::fmt;

use serde::Serialize;

use super::exec::{checker, denominators, execute};
use super::tree::{CalcItem, CalcTree, ProblemBlock, Step};
use crate::knowledge::KnowledgeBase;
use crate::program::parse_tactic;
use crate::rewrite::{normalize, rewrite_at, Inst};
use crate::terms::{parse, Term};

/// First item of a tree that does not follow from its predecessor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub id: String,
    pub reason: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.reason)
    }
}

struct Replayer<'a> {
    kb: &'a KnowledgeBase,
}

fn diverge(id: &str, reason: impl Into<String>) -> Divergence {
    Divergence { id: id.to_string(), reason: reason.into() }
}

impl Replayer<'_> {
    fn term(&self, id: &str, s: &str) -> Result<Term, Divergence> {
        parse(s, &self.kb.signature).map(|t| t.stripped()).map_err(|e| diverge(id, format!("unreadable term: {e}")))
    }

    fn block(&self, b: &ProblemBlock) -> Result<Option<Term>, Divergence> {
        let mut ctx = Vec::new();
        for a in &b.assumptions {
            ctx.push(self.term(&b.id, a)?);
        }
        let mut cur: Option<Term> = None;
        for item in &b.solution {
            cur = Some(self.item(item, cur.as_ref(), &mut ctx)?);
        }
        let claimed = match &b.result {
            Some(r) => Some(self.term(&b.id, r)?),
            None => None,
        };
        if claimed.is_some() && claimed != cur {
            return Err(diverge(&b.id, "result differs from the last step"));
        }
        Ok(cur)
    }

    fn item(&self, item: &CalcItem, cur: Option<&Term>, ctx: &mut Vec<Term>) -> Result<Term, Divergence> {
        let out = match item {
            CalcItem::Problem(p) => {
                self.block(p)?.ok_or_else(|| diverge(&p.id, "sub-problem without result"))?
            }
            CalcItem::Step(s) => self.step(s, cur, ctx)?,
        };
        denominators(&out, ctx);
        Ok(out)
    }

    fn step(&self, s: &Step, cur: Option<&Term>, ctx: &mut Vec<Term>) -> Result<Term, Divergence> {
        let sig = &self.kb.signature;
        let claimed = self.term(&s.id, &s.term)?;
        let got = if let Some(t) = &s.tactic {
            let tac = parse_tactic(t, sig).map_err(|e| diverge(&s.id, format!("unreadable tactic: {e}")))?;
            let ex = execute(self.kb, &tac, cur, ctx).map_err(|e| diverge(&s.id, e.to_string()))?;
            if !s.detail.is_empty() {
                let mut t = cur.cloned();
                let mut inner = ctx.clone();
                for d in &s.detail {
                    t = Some(self.item(d, t.as_ref(), &mut inner)?);
                }
                if t.as_ref() != Some(&ex.term) {
                    return Err(diverge(&s.id, "rewrites do not end in the result"));
                }
            }
            ex.term
        } else if let Some(r) = &s.rule {
            let cur = cur.ok_or_else(|| diverge(&s.id, "rewrite without a term"))?;
            let rs = self
                .kb
                .rule_set(&r.set)
                .ok_or_else(|| diverge(&s.id, format!("unknown rule set `{}`", r.set)))?
                .with_facts(ctx);
            let mut inst = Inst::new();
            for (k, v) in &r.inst {
                inst.insert(k.clone(), self.term(&s.id, v)?);
            }
            rewrite_at(&rs, cur, &r.path, &r.rule, &inst).map_err(|e| diverge(&s.id, e.to_string()))?
        } else if !s.detail.is_empty() {
            let mut t = cur.cloned();
            for d in &s.detail {
                t = Some(self.item(d, t.as_ref(), ctx)?);
            }
            t.expect("detail is not empty")
        } else if let Some(set) = &s.check {
            let cur = cur.ok_or_else(|| diverge(&s.id, "input without a term"))?;
            let rs = checker(self.kb, Some(set), ctx);
            let inst = Inst::new();
            let (a, b) = (normalize(&rs, cur, &inst), normalize(&rs, &claimed, &inst));
            match (a, b) {
                (Ok(a), Ok(b)) if a == b => claimed.clone(),
                _ => return Err(diverge(&s.id, format!("not equal to its predecessor under {set}"))),
            }
        } else {
            return Err(diverge(&s.id, "step without justification"));
        };
        if got != claimed {
            return Err(diverge(&s.id, "term differs from the replayed one"));
        }
        Ok(got)
    }
}

/// Re-executes every step of a tree from its predecessor.
pub fn check_tree(kb: &KnowledgeBase, tree: &CalcTree) -> Result<(), Divergence> {
    Replayer { kb }.block(&tree.root).map(|_| ())
}
