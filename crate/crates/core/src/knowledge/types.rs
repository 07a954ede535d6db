use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::terms::Term;

/// Conditional rewrite rule `lhs = rhs` under `conditions`. Every variable
/// of `lhs` is a pattern variable; `bdv` and other names listed by a rule
/// set instantiation are fixed before matching.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub lhs: Term,
    pub rhs: Term,
    pub conditions: Vec<Term>,
}

/// Built-in evaluation steps a rule set may enable next to its rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hook {
    /// Ground arithmetic and comparisons on numerals.
    Arith,
    /// Structural predicates and list/equation selectors.
    Predicates,
    /// Flattens a product, folds numerals, merges powers of equal bases and
    /// orders the factors.
    OrderProduct,
    /// Flattens a sum, collects like monomials and orders the summands.
    OrderSum,
}

impl Hook {
    pub const ALL: [Hook; 4] = [Hook::Arith, Hook::Predicates, Hook::OrderProduct, Hook::OrderSum];

    /// Name used in traces, prefixed with `#` so it never clashes with a
    /// theorem name.
    pub fn trace_name(self) -> &'static str {
        match self {
            Hook::Arith => "#arith",
            Hook::Predicates => "#predicates",
            Hook::OrderProduct => "#order_product",
            Hook::OrderSum => "#order_sum",
        }
    }

    pub fn from_trace_name(name: &str) -> Option<Hook> {
        Hook::ALL.into_iter().find(|h| h.trace_name() == name)
    }
}

pub const DEFAULT_MAX_STEPS: usize = 2000;

/// A resolved rule set: ordered rules plus hooks, with the rule set used to
/// discharge rule conditions.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub name: String,
    pub rules: Vec<Rule>,
    pub hooks: Vec<Hook>,
    pub max_steps: usize,
    pub conditions: Option<Arc<RuleSet>>,
    /// Propositions known to be true, matched literally (trace name `#fact`).
    pub facts: Vec<Term>,
}

impl RuleSet {
    pub fn new(name: &str, rules: Vec<Rule>, hooks: Vec<Hook>) -> RuleSet {
        RuleSet { name: name.to_string(), rules, hooks, max_steps: DEFAULT_MAX_STEPS, conditions: None, facts: Vec::new() }
    }

    /// Hooks only: ground arithmetic and predicates.
    pub fn evaluator() -> RuleSet {
        RuleSet::new("#eval", Vec::new(), vec![Hook::Arith, Hook::Predicates])
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// A copy that also knows `facts` to be true, here and in its
    /// condition set.
    pub fn with_facts(&self, facts: &[Term]) -> RuleSet {
        if facts.is_empty() {
            return self.clone();
        }
        let mut known = self.facts.clone();
        for f in fact_closure(facts) {
            if !known.contains(&f) {
                known.push(f);
            }
        }
        RuleSet {
            name: self.name.clone(),
            rules: self.rules.clone(),
            hooks: self.hooks.clone(),
            max_steps: self.max_steps,
            conditions: self.conditions.as_ref().map(|c| Arc::new(c.with_facts(facts))),
            facts: known,
        }
    }
}

/// The facts plus the obvious consequences of strict inequalities.
pub fn fact_closure(facts: &[Term]) -> Vec<Term> {
    let mut props: Vec<Term> = Vec::new();
    let mut push = |t: Term| {
        if !props.contains(&t) {
            props.push(t);
        }
    };
    for f in facts {
        push(f.clone());
        if let (Some(op), [a, b]) = (f.head_name(), f.args()) {
            let (a, b) = (a.clone(), b.clone());
            match op {
                ">" | "<" => {
                    let (big, small) = if op == ">" { (a, b) } else { (b, a) };
                    push(Term::binop("<", small.clone(), big.clone()));
                    push(Term::binop(">", big.clone(), small.clone()));
                    push(Term::binop(">=", big.clone(), small.clone()));
                    push(Term::binop("<=", small.clone(), big.clone()));
                    push(Term::binop("~=", big.clone(), small.clone()));
                    push(Term::binop("~=", small, big));
                }
                "~=" => push(Term::binop("~=", b, a)),
                _ => {}
            }
        }
    }
    props
}

/// A plausible but wrong transformation with targeted feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPattern {
    pub id: String,
    pub lhs: Term,
    pub rhs: Term,
    pub feedback: String,
}

/// A definition: formal statement plus informal explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub formal: Term,
    pub explanation: String,
}
