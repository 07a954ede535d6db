use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Simple types of the term language.
///
/// `Var` only occurs in polymorphic signature entries (written `'a`) and
/// transiently during inference; fully checked terms carry ground types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Base(String),
    Fun(Box<Type>, Box<Type>),
    List(Box<Type>),
    Var(String),
}

impl Type {
    pub fn base(name: &str) -> Type {
        Type::Base(name.to_string())
    }

    pub fn real() -> Type {
        Type::base("Real")
    }

    pub fn bool() -> Type {
        Type::base("Bool")
    }

    pub fn fun(from: Type, to: Type) -> Type {
        Type::Fun(Box::new(from), Box::new(to))
    }

    pub fn list(elem: Type) -> Type {
        Type::List(Box::new(elem))
    }

    /// Builds `a1 => a2 => ... => result`.
    pub fn curried(args: Vec<Type>, result: Type) -> Type {
        args.into_iter().rev().fold(result, |acc, a| Type::fun(a, acc))
    }

    /// Splits a curried function type into argument types and result.
    pub fn uncurry(&self) -> (Vec<&Type>, &Type) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Type::Fun(a, b) = cur {
            args.push(a.as_ref());
            cur = b;
        }
        (args, cur)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Type::Base(_) => true,
            Type::Var(_) => false,
            Type::Fun(a, b) => a.is_ground() && b.is_ground(),
            Type::List(e) => e.is_ground(),
        }
    }

    pub fn base_names(&self, out: &mut Vec<String>) {
        match self {
            Type::Base(n) => out.push(n.clone()),
            Type::Var(_) => {}
            Type::Fun(a, b) => {
                a.base_names(out);
                b.base_names(out);
            }
            Type::List(e) => e.base_names(out),
        }
    }

    /// Parses type syntax: `Real`, `'a`, `Real list`, `Real => Bool`,
    /// parentheses for grouping. `=>` associates to the right.
    pub fn parse(text: &str) -> Result<Type, String> {
        let tokens = tokenize_type(text)?;
        let mut pos = 0;
        let ty = parse_fun(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(format!("unexpected `{}` in type `{}`", tokens[pos], text));
        }
        Ok(ty)
    }
}

fn tokenize_type(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' || c == ')' {
            out.push(c.to_string());
            i += 1;
        } else if c == '=' && chars.get(i + 1) == Some(&'>') {
            out.push("=>".into());
            i += 2;
        } else if c == '\'' || c.is_alphanumeric() || c == '_' {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else {
            return Err(format!("unexpected character `{c}` in type `{text}`"));
        }
    }
    Ok(out)
}

fn parse_fun(tokens: &[String], pos: &mut usize) -> Result<Type, String> {
    let lhs = parse_postfix(tokens, pos)?;
    if tokens.get(*pos).map(String::as_str) == Some("=>") {
        *pos += 1;
        let rhs = parse_fun(tokens, pos)?;
        return Ok(Type::fun(lhs, rhs));
    }
    Ok(lhs)
}

fn parse_postfix(tokens: &[String], pos: &mut usize) -> Result<Type, String> {
    let mut ty = match tokens.get(*pos).map(String::as_str) {
        Some("(") => {
            *pos += 1;
            let inner = parse_fun(tokens, pos)?;
            if tokens.get(*pos).map(String::as_str) != Some(")") {
                return Err("expected `)` in type".into());
            }
            *pos += 1;
            inner
        }
        Some(t) if t.starts_with('\'') => {
            *pos += 1;
            Type::Var(t[1..].to_string())
        }
        Some(t) if t != "=>" && t != ")" && t != "list" => {
            *pos += 1;
            Type::Base(t.to_string())
        }
        other => return Err(format!("expected a type, found {other:?}")),
    };
    while tokens.get(*pos).map(String::as_str) == Some("list") {
        *pos += 1;
        ty = Type::list(ty);
    }
    Ok(ty)
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Base(n) => write!(f, "{n}"),
            Type::Var(n) => write!(f, "'{n}"),
            Type::List(e) => match e.as_ref() {
                Type::Fun(..) => write!(f, "({e}) list"),
                _ => write!(f, "{e} list"),
            },
            Type::Fun(a, b) => match a.as_ref() {
                Type::Fun(..) => write!(f, "({a}) => {b}"),
                _ => write!(f, "{a} => {b}"),
            },
        }
    }
}

/// Unification state for type inference. Variables are named strings;
/// fresh ones are generated with a `?` prefix so they never clash with
/// signature variables after instantiation.
#[derive(Debug, Default)]
pub struct Unifier {
    subst: BTreeMap<String, Type>,
    counter: usize,
}

impl Unifier {
    pub fn fresh(&mut self) -> Type {
        self.counter += 1;
        Type::Var(format!("?{}", self.counter))
    }

    /// Renames the variables of a polymorphic signature type apart.
    pub fn instantiate(&mut self, ty: &Type) -> Type {
        let mut map = BTreeMap::new();
        self.instantiate_with(ty, &mut map)
    }

    fn instantiate_with(&mut self, ty: &Type, map: &mut BTreeMap<String, Type>) -> Type {
        match ty {
            Type::Base(_) => ty.clone(),
            Type::Var(v) => {
                if let Some(t) = map.get(v) {
                    return t.clone();
                }
                let t = self.fresh();
                map.insert(v.clone(), t.clone());
                t
            }
            Type::Fun(a, b) => {
                let a = self.instantiate_with(a, map);
                let b = self.instantiate_with(b, map);
                Type::fun(a, b)
            }
            Type::List(e) => Type::list(self.instantiate_with(e, map)),
        }
    }

    pub fn resolve(&self, ty: &Type) -> Type {
        match ty {
            Type::Base(_) => ty.clone(),
            Type::Var(v) => match self.subst.get(v) {
                Some(t) => self.resolve(t),
                None => ty.clone(),
            },
            Type::Fun(a, b) => Type::fun(self.resolve(a), self.resolve(b)),
            Type::List(e) => Type::list(self.resolve(e)),
        }
    }

    fn occurs(&self, v: &str, ty: &Type) -> bool {
        match self.resolve(ty) {
            Type::Var(w) => w == v,
            Type::Base(_) => false,
            Type::Fun(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            Type::List(e) => self.occurs(v, &e),
        }
    }

    pub fn unify(&mut self, a: &Type, b: &Type) -> bool {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => true,
            (Type::Var(x), other) | (other, Type::Var(x)) => {
                if self.occurs(x, other) {
                    return false;
                }
                self.subst.insert(x.clone(), other.clone());
                true
            }
            (Type::Base(x), Type::Base(y)) => x == y,
            (Type::Fun(a1, b1), Type::Fun(a2, b2)) => self.unify(a1, a2) && self.unify(b1, b2),
            (Type::List(x), Type::List(y)) => self.unify(x, y),
            _ => false,
        }
    }

    /// Resolves and replaces still-open variables by `Real`, the default
    /// type of otherwise unconstrained variables.
    pub fn finish(&self, ty: &Type) -> Type {
        default_vars(&self.resolve(ty))
    }
}

fn default_vars(ty: &Type) -> Type {
    match ty {
        Type::Var(_) => Type::real(),
        Type::Base(_) => ty.clone(),
        Type::Fun(a, b) => Type::fun(default_vars(a), default_vars(b)),
        Type::List(e) => Type::list(default_vars(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_types() {
        let t = Type::parse("Real => Real list => Bool").unwrap();
        assert_eq!(
            t,
            Type::fun(Type::real(), Type::fun(Type::list(Type::real()), Type::bool()))
        );
        assert_eq!(t.to_string(), "Real => Real list => Bool");
        let h = Type::parse("(Real => Real) => Desc").unwrap();
        assert_eq!(h.to_string(), "(Real => Real) => Desc");
        assert!(Type::parse("Real =>").is_err());
    }

    #[test]
    fn unifies_polymorphic_equality() {
        let mut u = Unifier::default();
        let eq = u.instantiate(&Type::parse("'a => 'a => Bool").unwrap());
        let (args, _) = eq.uncurry();
        let (a0, a1) = (args[0].clone(), args[1].clone());
        assert!(u.unify(&a0, &Type::real()));
        assert!(!u.unify(&a1, &Type::bool()));
        assert_eq!(u.resolve(&a1), Type::real());
    }

    #[test]
    fn occurs_check_rejects_infinite_types() {
        let mut u = Unifier::default();
        let v = u.fresh();
        assert!(!u.unify(&v, &Type::fun(v.clone(), Type::real())));
    }
}
