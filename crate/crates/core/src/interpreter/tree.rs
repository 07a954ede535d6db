use serde::{Deserialize, Serialize};

use crate::knowledge::files::ModelFile;
use crate::program::Key;

/// A rewrite inside a rule-set step: rule (or `#hook`) applied at `path`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApp {
    pub rule: String,
    pub path: Vec<usize>,
    /// Rule set the rule was applied from.
    pub set: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inst: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub id: String,
    /// Tactic justifying the step; absent for accepted user input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tactic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleApp>,
    /// Rule set under which an input step equals its predecessor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
    /// The term typed by the user, when the step came from input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub term: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detail: Vec<CalcItem>,
    /// Executed by the system while checking input further ahead.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub auto: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalcItem {
    Step(Step),
    Problem(ProblemBlock),
}

impl CalcItem {
    pub fn id(&self) -> &str {
        match self {
            CalcItem::Step(s) => &s.id,
            CalcItem::Problem(p) => &p.id,
        }
    }

    /// The term this item leaves behind.
    pub fn result(&self) -> Option<&str> {
        match self {
            CalcItem::Step(s) => Some(&s.term),
            CalcItem::Problem(p) => p.result.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemBlock {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub theory: String,
    pub problem: Key,
    pub method: Key,
    /// Rendered call, e.g. `SubProblem(Biegelinie, [...], [...], [q_0, x])`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<String>,
    pub model: ModelFile,
    /// Context at the start of the block.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
    /// Context at the end, including facts derived from denominators.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub context: Vec<String>,
    pub solution: Vec<CalcItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postcondition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalcTree {
    pub root: ProblemBlock,
}

impl ProblemBlock {
    pub fn spec_id(&self) -> String {
        format!("{}.spec", self.id)
    }

    pub fn solution_id(&self) -> String {
        format!("{}.sol", self.id)
    }

    pub fn block_at(&self, path: &[usize]) -> Option<&ProblemBlock> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => match self.solution.get(*i)? {
                CalcItem::Problem(p) => p.block_at(rest),
                CalcItem::Step(_) => None,
            },
        }
    }

    pub fn block_at_mut(&mut self, path: &[usize]) -> Option<&mut ProblemBlock> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => match self.solution.get_mut(*i)? {
                CalcItem::Problem(p) => p.block_at_mut(rest),
                CalcItem::Step(_) => None,
            },
        }
    }

    pub fn item_id(&self, index: usize) -> String {
        format!("{}.{}", self.id, index + 1)
    }
}

/// Gives `item` and everything below it ids under `id`.
pub fn assign_ids(item: &mut CalcItem, id: String) {
    match item {
        CalcItem::Step(s) => {
            for (i, d) in s.detail.iter_mut().enumerate() {
                assign_ids(d, format!("{id}.d{}", i + 1));
            }
            s.id = id;
        }
        CalcItem::Problem(p) => {
            for (i, d) in p.solution.iter_mut().enumerate() {
                assign_ids(d, format!("{id}.{}", i + 1));
            }
            p.id = id;
        }
    }
}

impl CalcTree {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<CalcTree, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Every node id in document order.
    pub fn ids(&self) -> Vec<String> {
        fn block(b: &ProblemBlock, out: &mut Vec<String>) {
            out.push(b.id.clone());
            out.push(b.spec_id());
            out.push(b.solution_id());
            for i in &b.solution {
                item(i, out);
            }
        }
        fn item(i: &CalcItem, out: &mut Vec<String>) {
            match i {
                CalcItem::Step(s) => {
                    out.push(s.id.clone());
                    for d in &s.detail {
                        item(d, out);
                    }
                }
                CalcItem::Problem(p) => block(p, out),
            }
        }
        let mut out = Vec::new();
        block(&self.root, &mut out);
        out
    }
}
