use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::check::{check_input_tactic, check_input_term, InputOutcome};
use super::state::{InterpState, StepProposal};
use super::tree::CalcTree;
use super::view::{render_view, View};
use super::InterpError;
use crate::knowledge::KnowledgeBase;
use crate::program::{key_id, Key};
use crate::specification::{match_model, problem_matches, refine, Field, InstanceFile, Model, ModelFeedback, ProblemInstance, Refs};
use crate::terms::parse;

const MODEL_NORM: &str = "norm_model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Model,
    Specify,
    Solve,
    Done,
}

/// Everything that changed a session, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    AddItem { field: Field, item: String },
    RemoveItem { field: Field, index: usize },
    SetRefs { refs: Refs },
    SkipSpecification,
    Next,
    InputTerm { term: String },
    InputTactic { tactic: String },
    RunSubproblem,
    AutoSolve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelStatus {
    pub feedback: ModelFeedback,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefsOutcome {
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// The most specific problem the model fits below the chosen one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<Key>,
}

/// Persistent form: the instance, the event log and the tree it produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionFile {
    pub instance_id: String,
    pub instance: InstanceFile,
    pub events: Vec<Event>,
    #[serde(default)]
    pub expanded: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<CalcTree>,
}

/// One student working on one instance: model, specification, solution.
#[derive(Debug, Clone)]
pub struct Session {
    pub instance: ProblemInstance,
    pub model: Model,
    pub refs: Refs,
    pub phase: Phase,
    pub state: Option<InterpState>,
    pub events: Vec<Event>,
    pub expanded: BTreeSet<String>,
}

impl Session {
    pub fn new(instance: ProblemInstance) -> Session {
        Session {
            instance,
            model: Model::default(),
            refs: Refs::default(),
            phase: Phase::Model,
            state: None,
            events: Vec::new(),
            expanded: ["r.sol".to_string()].into(),
        }
    }

    fn expect(&self, ok: &[Phase]) -> Result<(), InterpError> {
        if ok.contains(&self.phase) {
            Ok(())
        } else {
            Err(InterpError::Phase { found: self.phase })
        }
    }

    pub fn feedback(&self, kb: &KnowledgeBase) -> ModelFeedback {
        let formal = &self.instance.formalisation;
        let pattern = self
            .instance
            .refs
            .problem
            .as_ref()
            .and_then(|p| kb.problem_by_key(p))
            .map(|p| &p.model)
            .unwrap_or(formal);
        let rs = kb.rule_set(MODEL_NORM).unwrap_or_else(|| kb.prover());
        match_model(pattern, &self.model, formal, &rs, &kb.signature)
    }

    fn model_status(&mut self, kb: &KnowledgeBase) -> ModelStatus {
        let feedback = self.feedback(kb);
        if self.phase == Phase::Model && feedback.complete {
            self.phase = Phase::Specify;
        }
        ModelStatus { feedback, phase: self.phase }
    }

    pub fn add_item(&mut self, kb: &KnowledgeBase, field: Field, item: &str) -> Result<ModelStatus, InterpError> {
        self.expect(&[Phase::Model, Phase::Specify])?;
        let t = parse(item, &kb.signature)?.stripped();
        self.model.field_mut(field).push(t);
        self.events.push(Event::AddItem { field, item: item.to_string() });
        Ok(self.model_status(kb))
    }

    pub fn remove_item(&mut self, kb: &KnowledgeBase, field: Field, index: usize) -> Result<ModelStatus, InterpError> {
        self.expect(&[Phase::Model, Phase::Specify])?;
        let items = self.model.field_mut(field);
        if index >= items.len() {
            return Err(InterpError::not_found("item", &format!("{field:?} {index}")));
        }
        items.remove(index);
        self.events.push(Event::RemoveItem { field, index });
        Ok(self.model_status(kb))
    }

    fn start(&mut self, kb: &KnowledgeBase, theory: &str, problem: &[String], method: &[String]) -> Result<(), InterpError> {
        let st = InterpState::start(kb, &self.instance, &self.model, theory, problem, method)?;
        self.phase = if st.done { Phase::Done } else { Phase::Solve };
        self.state = Some(st);
        Ok(())
    }

    /// Accepts the references if they exist, fit together and the model
    /// satisfies the problem and the method's guard.
    pub fn set_refs(&mut self, kb: &KnowledgeBase, refs: Refs) -> Result<RefsOutcome, InterpError> {
        self.expect(&[Phase::Specify])?;
        let reject = |reason: String, suggestion| Ok(RefsOutcome { accepted: false, reason: Some(reason), suggestion });
        let (Some(theory), Some(pk), Some(mk)) = (&refs.theory, &refs.problem, &refs.method) else {
            return reject("theory, problem and method are all needed".into(), None);
        };
        let Some(problem) = kb.problem_by_key(pk) else {
            return reject(format!("unknown problem {}", key_id(pk)), None);
        };
        if kb.method(mk).is_none() {
            return reject(format!("unknown method {}", key_id(mk)), None);
        }
        let mut probe = self.instance.clone();
        probe.formalisation = self.model.clone();
        let suggestion = refine(kb, &probe, &problem.key).ok().map(|r| r.key).filter(|k| k != &problem.key);
        let prover = kb.prover().with_facts(&self.instance.assumptions);
        if problem_matches(problem, &self.model, &prover).is_none() {
            return reject(format!("the model does not fit {}", key_id(pk)), suggestion);
        }
        if !problem.methods.contains(mk) {
            return reject(format!("{} is not a method of {}", key_id(mk), key_id(pk)), suggestion);
        }
        let (theory, pk, mk) = (theory.clone(), pk.clone(), mk.clone());
        if let Err(e) = self.start(kb, &theory, &pk, &mk) {
            return reject(e.to_string(), suggestion);
        }
        self.refs = refs.clone();
        self.events.push(Event::SetRefs { refs });
        Ok(RefsOutcome { accepted: true, reason: None, suggestion })
    }

    /// Takes the hidden formalisation and references as given.
    pub fn skip_specification(&mut self, kb: &KnowledgeBase) -> Result<(), InterpError> {
        self.expect(&[Phase::Model, Phase::Specify])?;
        let refs = self.instance.refs.clone();
        let (Some(theory), Some(pk), Some(mk)) = (&refs.theory, &refs.problem, &refs.method) else {
            return Err(InterpError::MissingArgument("instance references".into()));
        };
        self.model = self.instance.formalisation.clone();
        self.start(kb, theory, pk, mk)?;
        self.refs = refs;
        self.events.push(Event::SkipSpecification);
        Ok(())
    }

    fn solving(&mut self) -> Result<&mut InterpState, InterpError> {
        self.expect(&[Phase::Solve])?;
        Ok(self.state.as_mut().expect("solve phase has a state"))
    }

    fn after(&mut self, e: Event) {
        if self.state.as_ref().is_some_and(|s| s.done) {
            self.phase = Phase::Done;
        }
        self.events.push(e);
    }

    pub fn next(&mut self, kb: &KnowledgeBase) -> Result<StepProposal, InterpError> {
        let p = self.solving()?.next_step(kb)?;
        self.after(Event::Next);
        Ok(p)
    }

    pub fn run_subproblem(&mut self, kb: &KnowledgeBase) -> Result<Vec<StepProposal>, InterpError> {
        let st = self.solving()?;
        if st.next_subproblem().is_none() {
            return Err(InterpError::not_applicable("SubProblem", "the next step is not a sub-problem"));
        }
        let out = st.run_subproblem(kb)?;
        self.after(Event::RunSubproblem);
        Ok(out)
    }

    pub fn input_term(&mut self, kb: &KnowledgeBase, text: &str) -> Result<InputOutcome, InterpError> {
        let t = parse(text, &kb.signature)?.stripped();
        let out = check_input_term(self.solving()?, kb, &t)?;
        if out.is_accepted() {
            self.after(Event::InputTerm { term: text.to_string() });
        }
        Ok(out)
    }

    pub fn input_tactic(&mut self, kb: &KnowledgeBase, text: &str) -> Result<InputOutcome, InterpError> {
        let out = check_input_tactic(self.solving()?, kb, text)?;
        if out.is_accepted() {
            self.after(Event::InputTactic { tactic: text.to_string() });
        }
        Ok(out)
    }

    pub fn auto_solve(&mut self, kb: &KnowledgeBase) -> Result<(), InterpError> {
        let r = self.solving()?.auto_solve(kb);
        self.after(Event::AutoSolve);
        r
    }

    pub fn tree(&self) -> Option<&CalcTree> {
        self.state.as_ref().map(|s| &s.tree)
    }

    pub fn toggle(&mut self, id: &str) {
        if !self.expanded.remove(id) {
            self.expanded.insert(id.to_string());
        }
    }

    pub fn view(&self) -> Option<View> {
        self.tree().map(|t| render_view(t, &self.expanded))
    }

    pub fn to_file(&self, kb: &KnowledgeBase) -> SessionFile {
        SessionFile {
            instance_id: self.instance.id.clone(),
            instance: self.instance.to_file(&kb.signature),
            events: self.events.clone(),
            expanded: self.expanded.iter().cloned().collect(),
            tree: self.tree().cloned(),
        }
    }

    /// Rebuilds a session by replaying its events.
    pub fn restore(kb: &KnowledgeBase, f: &SessionFile) -> Result<Session, InterpError> {
        let inst = ProblemInstance::from_file(&f.instance_id, &f.instance, &kb.signature)
            .map_err(|e| InterpError::Parse { message: e.to_string(), offset: None })?;
        let mut s = Session::new(inst);
        for e in &f.events {
            match e {
                Event::AddItem { field, item } => {
                    s.add_item(kb, *field, item)?;
                }
                Event::RemoveItem { field, index } => {
                    s.remove_item(kb, *field, *index)?;
                }
                Event::SetRefs { refs } => {
                    s.set_refs(kb, refs.clone())?;
                }
                Event::SkipSpecification => s.skip_specification(kb)?,
                Event::Next => {
                    s.next(kb)?;
                }
                Event::InputTerm { term } => {
                    s.input_term(kb, term)?;
                }
                Event::InputTactic { tactic } => {
                    s.input_tactic(kb, tactic)?;
                }
                Event::RunSubproblem => {
                    s.run_subproblem(kb)?;
                }
                Event::AutoSolve => {
                    let _ = s.auto_solve(kb);
                }
            }
        }
        s.expanded = f.expanded.iter().cloned().collect();
        Ok(s)
    }
}
