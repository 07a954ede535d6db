use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::types::Type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assoc {
    Left,
    Right,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixity {
    pub prec: u8,
    pub assoc: Assoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstDecl {
    pub ty: Type,
    /// Theory that declares the constant, the target of click-to-definition.
    pub origin: Option<String>,
}

/// Precedence of prefix operators (`-` and `d/dx`): tighter than `*`,
/// looser than `^`.
pub const PREFIX_PREC: u8 = 75;
/// Precedence of atoms and applications.
pub const ATOM_PREC: u8 = 100;

/// Reserved constant names with special surface syntax.
pub const LIST: &str = "[]";
pub const DERIV: &str = "d/d";
pub const NEG: &str = "neg";

/// Constant declarations and operator fixities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    consts: BTreeMap<String, ConstDecl>,
    infix: BTreeMap<String, Fixity>,
    aliases: BTreeMap<String, String>,
    base_types: BTreeSet<String>,
}

impl Signature {
    pub fn empty() -> Signature {
        Signature::default()
    }

    /// Arithmetic, relations, connectives and the derivative binder.
    pub fn standard() -> Signature {
        let mut sig = Signature::default();
        for b in ["Real", "Bool"] {
            sig.declare_base(b);
        }
        let arith = Type::parse("Real => Real => Real").unwrap();
        let rel = Type::parse("Real => Real => Bool").unwrap();
        let conn = Type::parse("Bool => Bool => Bool").unwrap();
        sig.declare_infix("^", arith.clone(), 80, Assoc::Right);
        sig.declare_infix("*", arith.clone(), 70, Assoc::Left);
        sig.declare_infix("/", arith.clone(), 70, Assoc::Left);
        sig.declare_infix("+", arith.clone(), 60, Assoc::Left);
        sig.declare_infix("-", arith, 60, Assoc::Left);
        sig.declare_infix("=", Type::parse("'a => 'a => Bool").unwrap(), 40, Assoc::None);
        sig.declare_infix("~=", Type::parse("'a => 'a => Bool").unwrap(), 40, Assoc::None);
        for r in ["<", ">", "<=", ">="] {
            sig.declare_infix(r, rel.clone(), 40, Assoc::None);
        }
        sig.declare_infix("&", conn.clone(), 30, Assoc::Left);
        sig.declare_infix("|", conn, 25, Assoc::Left);
        sig.declare("true", Type::bool());
        sig.declare("false", Type::bool());
        sig.declare("not", Type::parse("Bool => Bool").unwrap());
        sig.declare(NEG, Type::parse("Real => Real").unwrap());
        sig.declare(DERIV, Type::parse("Real => Real => Real").unwrap());
        for (alias, canon) in [("∧", "&"), ("∨", "|"), ("≠", "~="), ("≤", "<="), ("≥", ">="), ("·", "*")] {
            sig.aliases.insert(alias.to_string(), canon.to_string());
        }
        sig
    }

    pub fn declare_base(&mut self, name: &str) {
        self.base_types.insert(name.to_string());
    }

    pub fn declare(&mut self, name: &str, ty: Type) {
        self.consts.insert(name.to_string(), ConstDecl { ty, origin: None });
    }

    pub fn declare_infix(&mut self, name: &str, ty: Type, prec: u8, assoc: Assoc) {
        self.declare(name, ty);
        self.infix.insert(name.to_string(), Fixity { prec, assoc });
    }

    pub fn set_fixity(&mut self, name: &str, fixity: Fixity) {
        self.infix.insert(name.to_string(), fixity);
    }

    pub fn set_origin(&mut self, name: &str, origin: &str) {
        if let Some(d) = self.consts.get_mut(name) {
            d.origin = Some(origin.to_string());
        }
    }

    pub fn add_alias(&mut self, alias: &str, canonical: &str) {
        self.aliases.insert(alias.to_string(), canonical.to_string());
    }

    pub fn canonical<'a>(&'a self, name: &'a str) -> &'a str {
        self.aliases.get(name).map(String::as_str).unwrap_or(name)
    }

    pub fn lookup(&self, name: &str) -> Option<&ConstDecl> {
        self.consts.get(self.canonical(name))
    }

    pub fn is_const(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    pub fn fixity(&self, name: &str) -> Option<Fixity> {
        self.infix.get(self.canonical(name)).copied()
    }

    pub fn is_base_type(&self, name: &str) -> bool {
        self.base_types.contains(name)
    }

    pub fn constants(&self) -> impl Iterator<Item = (&String, &ConstDecl)> {
        self.consts.iter()
    }

    /// Adds every declaration of `other`; later declarations win.
    pub fn merge(&mut self, other: &Signature) {
        for (k, v) in &other.consts {
            self.consts.insert(k.clone(), v.clone());
        }
        for (k, v) in &other.infix {
            self.infix.insert(k.clone(), *v);
        }
        for (k, v) in &other.aliases {
            self.aliases.insert(k.clone(), v.clone());
        }
        self.base_types.extend(other.base_types.iter().cloned());
    }

    /// Base types used in declarations that were never declared.
    pub fn undeclared_base_types(&self) -> Vec<String> {
        let mut names = Vec::new();
        for d in self.consts.values() {
            d.ty.base_names(&mut names);
        }
        names.sort();
        names.dedup();
        names.retain(|n| !self.base_types.contains(n));
        names
    }
}
