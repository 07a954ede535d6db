//! Step-wise interpretation of tactic programs, the calculation tree
//! it builds, and checking of user input against the next steps.

mod check;
mod exec;
mod linsys;
mod replay;
mod session;
mod state;
mod tree;
mod view;

use thiserror::Error;

use crate::program::{key_id, Key, ProgramError};
use crate::rewrite::RewriteError;
use crate::specification::SpecError;
use crate::terms::TermError;

pub use check::{check_input_tactic, check_input_term, ErrorHint, InputOutcome};
pub use exec::{checker, denominators, execute, resolve, resolve_tactic, Executed};
pub use linsys::{solve_linear_system, LinearError};
pub use replay::{check_tree, Divergence};
pub use session::{Event, ModelStatus, Phase, RefsOutcome, Session, SessionFile};
pub use state::{compile, Frame, InterpState, Instr, StepProposal, DEFAULT_LOOKAHEAD};
pub use tree::{assign_ids, CalcItem, CalcTree, ProblemBlock, RuleApp, Step};
pub use view::{render_view, Line, LineKind, View};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("the calculation is finished")]
    AtEnd,
    #[error("guard of {} does not hold{}", key_id(.problem), .clause.as_ref().map(|c| format!(": {c}")).unwrap_or_default())]
    GuardFailed { problem: Key, clause: Option<String> },
    #[error("{tactic} is not applicable: {reason}")]
    NotApplicable { tactic: String, reason: String },
    #[error("there is no current term yet")]
    NoCurrentTerm,
    #[error("unknown {kind} `{key}`")]
    NotFound { kind: String, key: String },
    #[error("no value for `{0}`")]
    MissingArgument(String),
    #[error("not possible in phase {found:?}")]
    Phase { found: Phase },
    #[error("{message}")]
    Parse { message: String, offset: Option<usize> },
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

impl InterpError {
    pub fn not_applicable(tactic: &str, reason: &str) -> InterpError {
        InterpError::NotApplicable { tactic: tactic.to_string(), reason: reason.to_string() }
    }

    pub fn not_found(kind: &str, key: &str) -> InterpError {
        InterpError::NotFound { kind: kind.to_string(), key: key.to_string() }
    }
}

impl From<SpecError> for InterpError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::NotFound { kind, key } => InterpError::NotFound { kind, key },
            SpecError::MissingArgument(a) => InterpError::MissingArgument(a),
            SpecError::NoMatch(k) => InterpError::GuardFailed { problem: k, clause: None },
        }
    }
}

impl From<ProgramError> for InterpError {
    fn from(e: ProgramError) -> Self {
        let offset = match &e {
            ProgramError::Syntax { pos, .. } | ProgramError::Term { pos, .. } => Some(*pos),
            _ => None,
        };
        InterpError::Parse { message: e.to_string(), offset }
    }
}

impl From<TermError> for InterpError {
    fn from(e: TermError) -> Self {
        InterpError::Parse { message: e.to_string(), offset: e.offset() }
    }
}
