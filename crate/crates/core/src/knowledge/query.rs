use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::Serialize;

use super::kb::{undeclared_constants, KbError, KnowledgeBase};
use crate::program::{dead_code, key_id, Key, Tactic};
use crate::terms::{render, Term};

/// Result of a click on a symbol or rule name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lookup {
    pub kind: LookupKind,
    pub name: String,
    pub theory: String,
    /// Surface form of the statement; rule names for a rule set.
    pub formal: String,
    pub conditions: Vec<String>,
    pub explanation: String,
    /// File the item was loaded from, relative to the KB root.
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LookupKind {
    Definition,
    Theorem,
    RuleSet,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", content = "key", rename_all = "snake_case")]
pub enum Item {
    Problem(Key),
    Method(Key),
    RuleSet(String),
    Definition(String),
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Problem(k) => write!(f, "problem:{}", key_id(k)),
            Item::Method(k) => write!(f, "method:{}", key_id(k)),
            Item::RuleSet(n) => write!(f, "ruleset:{n}"),
            Item::Definition(n) => write!(f, "definition:{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintIssue {
    pub kind: String,
    pub message: String,
}

fn constants(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Const { name, .. } => {
            out.insert(name.clone());
        }
        Term::App { head, args, .. } => {
            constants(head, out);
            for a in args {
                constants(a, out);
            }
        }
        _ => {}
    }
}

impl KnowledgeBase {
    /// Definition, theorem or rule set named `key`; also finds a definition
    /// through the symbol it explains.
    pub fn lookup_definition(&self, key: &str) -> Result<Lookup, KbError> {
        let sig = &self.signature;
        let entry = self
            .definitions
            .get(key)
            .or_else(|| self.definitions.values().find(|d| d.symbol.as_deref() == Some(key)));
        if let Some(d) = entry {
            return Ok(Lookup {
                kind: LookupKind::Definition,
                name: d.definition.name.clone(),
                theory: d.theory.clone(),
                formal: render(&d.definition.formal, sig),
                conditions: Vec::new(),
                explanation: d.definition.explanation.clone(),
                source: format!("{}/theory.json", d.theory),
            });
        }
        if let Some(t) = self.theorems.get(key) {
            return Ok(Lookup {
                kind: LookupKind::Theorem,
                name: key.to_string(),
                theory: t.theory.clone(),
                formal: format!("{} = {}", render(&t.rule.lhs, sig), render(&t.rule.rhs, sig)),
                conditions: t.rule.conditions.iter().map(|c| render(c, sig)).collect(),
                explanation: t.explanation.clone(),
                source: format!("{}/theory.json", t.theory),
            });
        }
        if let Some(r) = self.rulesets.get(key) {
            let mut parts: Vec<String> = r.set.rules.iter().map(|r| r.name.clone()).collect();
            parts.extend(r.set.hooks.iter().map(|h| h.trace_name().to_string()));
            return Ok(Lookup {
                kind: LookupKind::RuleSet,
                name: key.to_string(),
                theory: r.theory.clone(),
                formal: parts.join(", "),
                conditions: Vec::new(),
                explanation: r.file.explanation.clone(),
                source: format!("{}/theory.json", r.theory),
            });
        }
        Err(KbError::NotFound(key.to_string()))
    }

    fn prerequisites(&self, item: &Item) -> Vec<Item> {
        let mut out = Vec::new();
        match item {
            Item::Problem(k) => {
                if let Some(p) = self.problem_by_key(k) {
                    out.extend(p.methods.iter().cloned().map(Item::Method));
                    let mut cs = BTreeSet::new();
                    for t in p.model.interface().chain(p.model.where_.iter()) {
                        constants(t, &mut cs);
                    }
                    for c in cs {
                        if let Some(d) = self.definitions.values().find(|d| d.symbol.as_deref() == Some(c.as_str())) {
                            out.push(Item::Definition(d.definition.name.clone()));
                        }
                    }
                }
            }
            Item::Method(k) => {
                if let Some(m) = self.method(k) {
                    if let Some(c) = &m.check {
                        out.push(Item::RuleSet(c.clone()));
                    }
                    for t in m.program.body.tactics() {
                        match t {
                            Tactic::RewriteSet { set, .. } => out.push(Item::RuleSet(set.clone())),
                            Tactic::SubProblem { problem, method, .. } => {
                                out.push(Item::Problem(problem.clone()));
                                out.push(Item::Method(method.clone()));
                            }
                            _ => {}
                        }
                    }
                }
            }
            Item::RuleSet(n) => {
                if let Some(r) = self.rulesets.get(n) {
                    out.extend(r.file.include.iter().cloned().map(Item::RuleSet));
                }
            }
            Item::Definition(_) => {}
        }
        out
    }

    fn canonical_problem(&self, key: &str) -> Result<Key, KbError> {
        self.problem(key).map(|p| p.key.clone()).ok_or_else(|| KbError::NotFound(key.to_string()))
    }

    /// Everything needed to learn the given problems, prerequisites first.
    /// Ties are broken by the item's display name.
    pub fn knowledge_closure(&self, problems: &[String]) -> Result<Vec<Item>, KbError> {
        let mut todo: Vec<Item> = Vec::new();
        for p in problems {
            todo.push(Item::Problem(self.canonical_problem(p)?));
        }
        let mut deps: BTreeMap<Item, BTreeSet<Item>> = BTreeMap::new();
        while let Some(i) = todo.pop() {
            if deps.contains_key(&i) {
                continue;
            }
            let pre: BTreeSet<Item> = self.prerequisites(&i).into_iter().collect();
            todo.extend(pre.iter().cloned());
            deps.insert(i, pre);
        }
        let mut pending: BTreeMap<Item, usize> = deps.iter().map(|(k, v)| (k.clone(), v.len())).collect();
        let mut users: BTreeMap<Item, Vec<Item>> = BTreeMap::new();
        for (k, v) in &deps {
            for d in v {
                users.entry(d.clone()).or_default().push(k.clone());
            }
        }
        let mut ready: BinaryHeap<Reverse<(String, Item)>> = pending
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(k, _)| Reverse((k.to_string(), k.clone())))
            .collect();
        let mut out = Vec::new();
        while let Some(Reverse((_, item))) = ready.pop() {
            for u in users.get(&item).into_iter().flatten() {
                let n = pending.get_mut(u).expect("user is pending");
                *n -= 1;
                if *n == 0 {
                    ready.push(Reverse((u.to_string(), u.clone())));
                }
            }
            pending.remove(&item);
            out.push(item);
        }
        let mut rest: Vec<Item> = pending.into_keys().collect();
        rest.sort_by_key(|i| i.to_string());
        out.extend(rest);
        Ok(out)
    }

    pub fn lint(&self) -> Vec<LintIssue> {
        let mut out = Vec::new();
        let mut issue = |kind: &str, message: String| out.push(LintIssue { kind: kind.into(), message });
        for w in &self.warnings {
            issue("warning", w.clone());
        }
        for (name, t) in &self.theorems {
            let sig = self.signature_of(&t.theory);
            let r = &t.rule;
            for side in std::iter::once(&r.lhs).chain(std::iter::once(&r.rhs)).chain(r.conditions.iter()) {
                for c in undeclared_constants(side, sig) {
                    issue("dangling_link", format!("theorem {name}: constant `{c}` has no origin"));
                }
            }
            if matches!(r.lhs, Term::Var { .. }) {
                issue("rule", format!("theorem {name}: left-hand side is a lone variable"));
            }
            let lhs_vars = r.lhs.free_vars();
            let mut extra = r.rhs.free_vars();
            for c in &r.conditions {
                extra.extend(c.free_vars());
            }
            for v in extra {
                if !lhs_vars.contains(&v) && !v.starts_with("bdv") {
                    issue("rule", format!("theorem {name}: variable `{v}` does not occur on the left"));
                }
            }
        }
        for (name, d) in &self.definitions {
            for c in undeclared_constants(&d.definition.formal, self.signature_of(&d.theory)) {
                issue("dangling_link", format!("definition {name}: constant `{c}` has no origin"));
            }
        }
        for p in self.programs.values() {
            for m in dead_code(p) {
                issue("dead_code", format!("program {}: {m}", p.name));
            }
        }
        let used: BTreeSet<&str> = self.methods.values().map(|m| m.program.name.as_str()).collect();
        for name in self.programs.keys() {
            if !used.contains(name.as_str()) {
                issue("dead_code", format!("program {name} is not used by any method"));
            }
        }
        out
    }
}
