//! Knowledge base: theories with signatures, definitions and theorems,
//! rule sets, problem hierarchies and methods, loaded from a directory.
//!
//! Layout: `<root>/<theory>/theory.json`, `problems.json`, `methods.json`
//! and `programs/<name>.prog`.

pub mod files;
mod kb;
mod query;
mod types;

pub use kb::{DefinitionEntry, KbError, KnowledgeBase, Method, RuleSetEntry, Theorem, Theory};
pub use query::{Item, LintIssue, Lookup, LookupKind};
pub use types::*;
