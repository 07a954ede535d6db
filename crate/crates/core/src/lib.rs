//! Core engine: typed terms, knowledge bases, conditional rewriting, problem
//! specifications, tactic programs and their step-wise interpretation.

pub mod dialogue;
pub mod interpreter;
pub mod knowledge;
pub mod program;
pub mod rewrite;
pub mod specification;
pub mod terms;
