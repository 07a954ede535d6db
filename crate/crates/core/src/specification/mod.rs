//! Problem specifications: models, problem hierarchies, refinement,
//! sub-problem graphs and post-conditions.

mod graph;
mod guard;
mod instance;
mod matching;
mod model;
mod postcondition;
mod refine;

use thiserror::Error;

use crate::program::Key;

pub use graph::{ports, validate_graph, Edge, GraphNode, Port, SubProblemGraph, Violation};
pub use guard::{check_guard, formal_args, FormalArg, GuardOutcome};
pub use instance::{InstanceFile, ProblemInstance, Refs};
pub use matching::{match_model, ItemFeedback, ModelFeedback, Verdict};
pub use model::{descriptor, Field, Model, ProblemNode};
pub use postcondition::{check_postcondition, FunDef, PostCheck, Unfolder};
pub use refine::{eval_where, match_pattern, problem_matches, refine, Refinement};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("no problem under {0:?} matches")]
    NoMatch(Key),
    #[error("unknown {kind} `{key}`")]
    NotFound { kind: String, key: String },
    #[error("no value for `{0}`")]
    MissingArgument(String),
}

impl SpecError {
    pub fn not_found(kind: &str, key: &str) -> SpecError {
        SpecError::NotFound { kind: kind.to_string(), key: key.to_string() }
    }
}
