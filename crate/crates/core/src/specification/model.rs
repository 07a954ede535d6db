use serde::{Deserialize, Serialize};

use crate::knowledge::files::ModelFile;
use crate::program::Key;
use crate::terms::{parse, render, Signature, Term, TermError};

/// Given/Where/Find/Relate. Given, Find and Relate items are descriptor
/// applications such as `Traegerlaenge L`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub given: Vec<Term>,
    pub where_: Vec<Term>,
    pub find: Vec<Term>,
    pub relate: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Given,
    Where,
    Find,
    Relate,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Given, Field::Where, Field::Find, Field::Relate];
}

impl Model {
    pub fn field(&self, f: Field) -> &Vec<Term> {
        match f {
            Field::Given => &self.given,
            Field::Where => &self.where_,
            Field::Find => &self.find,
            Field::Relate => &self.relate,
        }
    }

    pub fn field_mut(&mut self, f: Field) -> &mut Vec<Term> {
        match f {
            Field::Given => &mut self.given,
            Field::Where => &mut self.where_,
            Field::Find => &mut self.find,
            Field::Relate => &mut self.relate,
        }
    }

    /// Descriptor items in interface order: given, find, relate.
    pub fn interface(&self) -> impl Iterator<Item = &Term> {
        self.given.iter().chain(self.find.iter()).chain(self.relate.iter())
    }

    pub fn is_empty(&self) -> bool {
        Field::ALL.iter().all(|f| self.field(*f).is_empty())
    }

    pub fn parse(file: &ModelFile, sig: &Signature) -> Result<Model, (Field, usize, TermError)> {
        let conv = |f: Field, items: &[String]| -> Result<Vec<Term>, (Field, usize, TermError)> {
            items
                .iter()
                .enumerate()
                .map(|(i, s)| parse(s, sig).map(|t| t.stripped()).map_err(|e| (f, i, e)))
                .collect()
        };
        Ok(Model {
            given: conv(Field::Given, &file.given)?,
            where_: conv(Field::Where, &file.where_)?,
            find: conv(Field::Find, &file.find)?,
            relate: conv(Field::Relate, &file.relate)?,
        })
    }

    pub fn to_file(&self, sig: &Signature) -> ModelFile {
        let conv = |ts: &[Term]| ts.iter().map(|t| render(t, sig)).collect();
        ModelFile {
            given: conv(&self.given),
            where_: conv(&self.where_),
            find: conv(&self.find),
            relate: conv(&self.relate),
        }
    }
}

/// `(descriptor, argument)` of an item like `Streckenlast q_0`.
pub fn descriptor(item: &Term) -> Option<(&str, &Term)> {
    match item.args() {
        [arg] => item.head_name().map(|d| (d, arg)),
        _ => None,
    }
}

/// A node of a problem hierarchy. `model` already includes everything
/// inherited from the ancestors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemNode {
    pub key: Key,
    pub theory: String,
    pub model: Model,
    /// Where-clauses declared on this node itself.
    pub own_where: Vec<Term>,
    pub methods: Vec<Key>,
    pub children: Vec<Key>,
    pub parent: Option<Key>,
    pub aliases: Vec<String>,
    pub explanation: String,
}
