use std::collections::BTreeMap;

use super::signature::{Signature, LIST};
use super::term::{Path, Term};
use super::types::{Type, Unifier};
use super::TermError;

struct Infer<'a> {
    sig: &'a Signature,
    unifier: Unifier,
    vars: BTreeMap<String, Type>,
}

/// Seeds for variable types, e.g. pattern variables declared by a rule.
pub type VarTypes = BTreeMap<String, Type>;

/// Infers the type of `t`, returning the annotated term and its type.
/// Unconstrained variables default to `Real`.
pub fn annotate(t: &Term, sig: &Signature, seeds: &VarTypes) -> Result<(Term, Type), TermError> {
    let mut inf = Infer { sig, unifier: Unifier::default(), vars: BTreeMap::new() };
    for (k, v) in seeds {
        let ty = inf.unifier.instantiate(v);
        inf.vars.insert(k.clone(), ty);
    }
    let mut path = Vec::new();
    let mut out = t.clone();
    let ty = inf.infer(&mut out, &mut path)?;
    inf.finish(&mut out);
    Ok((out, inf.unifier.finish(&ty)))
}

fn position(t: &Term, path: &Path) -> String {
    match t.meta().span {
        Some(s) => format!("offset {}", s.start),
        None => format!("path {path:?}"),
    }
}

impl<'a> Infer<'a> {
    fn set(&mut self, t: &mut Term, ty: Type) -> Type {
        t.meta_mut().ty = Some(ty.clone());
        ty
    }

    fn infer(&mut self, t: &mut Term, path: &mut Path) -> Result<Type, TermError> {
        match t {
            Term::Num { .. } => Ok(self.set(t, Type::real())),
            Term::Const { name, meta } => {
                let pos = meta.span.map(|s| s.start).unwrap_or(0);
                let decl = self
                    .sig
                    .lookup(name)
                    .ok_or_else(|| TermError::UnknownSymbol { name: name.clone(), pos })?;
                let ty = self.unifier.instantiate(&decl.ty);
                Ok(self.set(t, ty))
            }
            Term::Var { name, .. } => {
                let ty = match self.vars.get(name) {
                    Some(ty) => ty.clone(),
                    None => {
                        let ty = self.unifier.fresh();
                        self.vars.insert(name.clone(), ty.clone());
                        ty
                    }
                };
                Ok(self.set(t, ty))
            }
            Term::App { .. } => {
                let is_list = t.head_name() == Some(LIST);
                let here = position(t, path);
                let Term::App { head, args, .. } = t else { unreachable!() };
                if is_list {
                    let elem = self.unifier.fresh();
                    for (i, a) in args.iter_mut().enumerate() {
                        path.push(i + 1);
                        let aty = self.infer(a, path)?;
                        let at = position(a, path);
                        path.pop();
                        if !self.unifier.unify(&elem, &aty) {
                            return Err(TermError::Type {
                                at,
                                expected: self.unifier.finish(&elem),
                                found: self.unifier.finish(&aty),
                            });
                        }
                    }
                    let ty = Type::list(elem);
                    return Ok(self.set(t, ty));
                }
                path.push(0);
                let mut fty = self.infer(head, path)?;
                path.pop();
                for (i, a) in args.iter_mut().enumerate() {
                    path.push(i + 1);
                    let aty = self.infer(a, path)?;
                    let at = position(a, path);
                    path.pop();
                    let resolved = self.unifier.resolve(&fty);
                    let (param, result) = match resolved {
                        Type::Fun(p, r) => (*p, *r),
                        Type::Var(_) => {
                            let p = self.unifier.fresh();
                            let r = self.unifier.fresh();
                            self.unifier.unify(&fty, &Type::fun(p.clone(), r.clone()));
                            (p, r)
                        }
                        other => {
                            return Err(TermError::Type {
                                at: here,
                                expected: Type::fun(self.unifier.finish(&aty), Type::Var("b".into())),
                                found: self.unifier.finish(&other),
                            })
                        }
                    };
                    if !self.unifier.unify(&param, &aty) {
                        return Err(TermError::Type {
                            at,
                            expected: self.unifier.finish(&param),
                            found: self.unifier.finish(&aty),
                        });
                    }
                    fty = result;
                }
                Ok(self.set(t, fty))
            }
        }
    }

    fn finish(&self, t: &mut Term) {
        if let Some(ty) = t.meta().ty.clone() {
            t.meta_mut().ty = Some(self.unifier.finish(&ty));
        }
        if let Term::App { head, args, .. } = t {
            self.finish(head);
            for a in args {
                self.finish(a);
            }
        }
    }
}

/// Types of free variables as inferred for an annotated term.
pub fn var_types(t: &Term) -> VarTypes {
    let mut out = BTreeMap::new();
    collect(t, &mut out);
    out
}

fn collect(t: &Term, out: &mut VarTypes) {
    match t {
        Term::Var { name, meta } => {
            if let Some(ty) = &meta.ty {
                out.entry(name.clone()).or_insert_with(|| ty.clone());
            }
        }
        Term::App { head, args, .. } => {
            collect(head, out);
            for a in args {
                collect(a, out);
            }
        }
        _ => {}
    }
}
