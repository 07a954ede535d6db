//! Typed first-order term language: parsing, printing, typing, navigation
//! and substitution.
//!
//! Surface syntax: infix operators with declared precedences, application
//! by juxtaposition (`y x`) or with an argument tuple (`f(a, b)`), lists
//! `[a, b]`, prefix `-`, and derivatives `d/dx e`. Integer literals only;
//! rationals are written as quotients of literals. A `-` written directly in
//! front of a literal makes a negative literal.

mod parser;
mod render;
mod signature;
mod term;
mod types;
mod typing;

use std::collections::BTreeMap;

use thiserror::Error;

pub use render::render;
pub use signature::{Assoc, ConstDecl, Fixity, Signature, ATOM_PREC, DERIV, LIST, NEG, PREFIX_PREC};
pub use term::{term_cmp, Link, Meta, Path, Span, Term};
pub use types::{Type, Unifier};
pub use typing::{annotate, var_types, VarTypes};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TermError {
    #[error("syntax error at offset {pos}: expected {expected}")]
    Syntax { pos: usize, expected: String },
    #[error("unknown symbol `{name}` at offset {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("type error at {at}: expected {expected}, found {found}")]
    Type { at: String, expected: Type, found: Type },
    #[error("invalid path {0:?}")]
    InvalidPath(Path),
}

impl TermError {
    /// Source offset for errors that carry one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            TermError::Syntax { pos, .. } | TermError::UnknownSymbol { pos, .. } => Some(*pos),
            TermError::Type { at, .. } => at.strip_prefix("offset ").and_then(|s| s.parse().ok()),
            TermError::InvalidPath(_) => None,
        }
    }
}

/// Parses and typechecks `text`.
pub fn parse(text: &str, sig: &Signature) -> Result<Term, TermError> {
    parse_with(text, sig, &BTreeMap::new())
}

/// Like [`parse`], with declared types for some variables.
pub fn parse_with(text: &str, sig: &Signature, vars: &VarTypes) -> Result<Term, TermError> {
    let t = parser::parse_untyped(text, sig)?;
    let (t, _) = annotate(&t, sig, vars)?;
    Ok(t)
}

/// Parses a term that must have type `Bool`.
pub fn parse_prop(text: &str, sig: &Signature) -> Result<Term, TermError> {
    let t = parse(text, sig)?;
    let ty = t.ty().cloned().unwrap_or_else(Type::real);
    if ty != Type::bool() {
        return Err(TermError::Type { at: "offset 0".into(), expected: Type::bool(), found: ty });
    }
    Ok(t)
}

pub fn typecheck(t: &Term, sig: &Signature) -> Result<Type, TermError> {
    annotate(t, sig, &BTreeMap::new()).map(|(_, ty)| ty)
}

/// `replace_at` that also requires the replacement to have the type of the
/// replaced subterm and the result to typecheck.
pub fn replace_at_checked(t: &Term, path: &[usize], with: Term, sig: &Signature) -> Result<Term, TermError> {
    let (annotated, _) = annotate(t, sig, &BTreeMap::new())?;
    let old = annotated.subterm_at(path)?;
    let old_ty = old.ty().cloned().unwrap_or_else(Type::real);
    let seeds = var_types(&annotated);
    let (_, new_ty) = annotate(&with, sig, &seeds)?;
    if old_ty != new_ty {
        return Err(TermError::Type { at: format!("path {path:?}"), expected: old_ty, found: new_ty });
    }
    let out = t.replace_at(path, with)?;
    annotate(&out, sig, &BTreeMap::new()).map(|(t, _)| t)
}

/// Simultaneous substitution checking each binding against the variable's
/// inferred type.
pub fn substitute_checked(t: &Term, bindings: &BTreeMap<String, Term>, sig: &Signature) -> Result<Term, TermError> {
    let (annotated, _) = annotate(t, sig, &BTreeMap::new())?;
    let vars = var_types(&annotated);
    for (name, value) in bindings {
        let (_, vty) = annotate(value, sig, &BTreeMap::new())?;
        if let Some(expected) = vars.get(name) {
            if *expected != vty {
                return Err(TermError::Type { at: format!("binding {name}"), expected: expected.clone(), found: vty });
            }
        }
    }
    Ok(t.substitute(bindings))
}
