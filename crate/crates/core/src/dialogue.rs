//! User model and the rules deciding how to answer a student's requests.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interpreter::Phase;
use crate::knowledge::KnowledgeBase;
use crate::program::{key_id, Key};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Exercise,
    Explore,
    Exam,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub attempts: u64,
    pub completions: u64,
    pub next_step_requests: u64,
    pub rejected_inputs: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserModel {
    pub mode: Mode,
    /// Keyed by the problem's id, e.g. `Biegelinien`.
    pub problems: BTreeMap<String, Counters>,
    /// Successful unaided applications per rule set.
    pub rule_sets: BTreeMap<String, u64>,
    /// Problems solved silently when reached as sub-problems.
    pub black_boxed: BTreeSet<String>,
    /// Help requests in a row on `help_problem`.
    pub consecutive_help: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub help_problem: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    NextStep,
    InputTerm,
    InputTactic,
    AutoSolve,
}

impl RequestKind {
    pub fn is_help(self) -> bool {
        matches!(self, RequestKind::NextStep | RequestKind::AutoSolve)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub kind: RequestKind,
    /// Problem the request concerns: the innermost open block, or the
    /// sub-problem about to be opened.
    pub problem: Key,
    pub phase: Phase,
    /// Whether `problem` is the session's own problem.
    pub is_root: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Demand {
    #[default]
    InputTerm,
    SelectRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Grant,
    Deny { message: String },
    CounterRequest {
        #[serde(default)]
        demand: Demand,
    },
    AutoBlackbox,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct When {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<RequestKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_consecutive_help: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blackboxed: Option<bool>,
}

impl When {
    pub fn is_always(&self) -> bool {
        *self == When::default()
    }

    fn holds(&self, um: &UserModel, req: &Request) -> bool {
        let key = key_id(&req.problem);
        let boxed = !req.is_root && um.black_boxed.contains(&key);
        let help = if um.help_problem.as_deref() == Some(key.as_str()) { um.consecutive_help } else { 0 };
        self.mode.is_none_or(|m| m == um.mode)
            && self.request.is_none_or(|r| r == req.kind)
            && self.blackboxed.is_none_or(|b| b == boxed)
            && self.min_consecutive_help.is_none_or(|n| req.kind.is_help() && help >= n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogRule {
    pub id: String,
    #[serde(default)]
    pub when: When,
    pub action: Action,
}

#[derive(Debug, Error)]
pub enum DialogError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

/// Ordered rules; the last one always grants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DialogRules(Vec<DialogRule>);

impl DialogRules {
    pub fn new(mut rules: Vec<DialogRule>) -> DialogRules {
        let terminal = rules.last().is_some_and(|r| r.when.is_always() && r.action == Action::Grant);
        if !terminal {
            rules.push(DialogRule { id: "grant".into(), when: When::default(), action: Action::Grant });
        }
        DialogRules(rules)
    }

    pub fn load(path: &Path) -> Result<DialogRules, DialogError> {
        let p = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| DialogError::Io { path: p.clone(), message: e.to_string() })?;
        let rules = serde_json::from_str(&text).map_err(|e| DialogError::Format { path: p, message: e.to_string() })?;
        Ok(DialogRules::new(rules))
    }

    pub fn rules(&self) -> &[DialogRule] {
        &self.0
    }

    /// First matching rule and its action.
    pub fn decide(&self, um: &UserModel, req: &Request) -> (&str, Action) {
        let r = self.0.iter().find(|r| r.when.holds(um, req)).expect("last rule always matches");
        (&r.id, r.action.clone())
    }
}

impl Default for DialogRules {
    fn default() -> Self {
        DialogRules::new(vec![
            DialogRule { id: "auto_blackbox".into(), when: When { blackboxed: Some(true), ..When::default() }, action: Action::AutoBlackbox },
            DialogRule {
                id: "counter_request".into(),
                when: When {
                    mode: Some(Mode::Exercise),
                    request: Some(RequestKind::NextStep),
                    min_consecutive_help: Some(3),
                    ..When::default()
                },
                action: Action::CounterRequest { demand: Demand::InputTerm },
            },
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum UserEvent {
    StepAccepted {
        problem: Key,
        #[serde(default)]
        rule_sets: Vec<String>,
    },
    StepRejected { problem: Key },
    HelpRequested { problem: Key },
    ProblemCompleted { problem: Key },
}

impl UserModel {
    pub fn new(mode: Mode) -> UserModel {
        UserModel { mode, ..UserModel::default() }
    }

    /// Boxes the problem `key`; false if the KB does not know it.
    pub fn black_box(&mut self, kb: &KnowledgeBase, key: &str) -> bool {
        match kb.problem(key) {
            Some(p) => {
                self.black_boxed.insert(key_id(&p.key));
                true
            }
            None => false,
        }
    }

    fn counters(&mut self, p: &[String]) -> &mut Counters {
        self.problems.entry(key_id(p)).or_default()
    }

    pub fn update(&mut self, e: &UserEvent) {
        match e {
            UserEvent::StepAccepted { problem, rule_sets } => {
                self.counters(problem).attempts += 1;
                for r in rule_sets {
                    *self.rule_sets.entry(r.clone()).or_default() += 1;
                }
                self.consecutive_help = 0;
            }
            UserEvent::StepRejected { problem } => {
                let c = self.counters(problem);
                c.attempts += 1;
                c.rejected_inputs += 1;
            }
            UserEvent::HelpRequested { problem } => {
                self.counters(problem).next_step_requests += 1;
                let key = key_id(problem);
                if self.help_problem.as_deref() == Some(key.as_str()) {
                    self.consecutive_help += 1;
                } else {
                    self.help_problem = Some(key);
                    self.consecutive_help = 1;
                }
            }
            UserEvent::ProblemCompleted { problem } => {
                self.counters(problem).completions += 1;
                self.consecutive_help = 0;
            }
        }
    }
}
