use std::collections::BTreeMap;

use thiserror::Error;

use crate::knowledge::RuleSet;
use crate::rewrite::{normalize, Inst, RewriteError};
use crate::terms::{render, Signature, Term};

fn show(t: &Term) -> String {
    render(t, &Signature::standard())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearError {
    #[error("not linear in the unknowns: {0}")]
    NotLinear(String),
    #[error("the system is {0}")]
    Unsolvable(String),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

fn flatten<'a>(op: &str, t: &'a Term, out: &mut Vec<&'a Term>) {
    match t.as_binop(op) {
        Some((a, b)) => {
            flatten(op, a, out);
            flatten(op, b, out);
        }
        None => out.push(t),
    }
}

fn product(fs: Vec<Term>) -> Term {
    fs.into_iter().reduce(|a, b| Term::binop("*", a, b)).unwrap_or_else(|| Term::int(1))
}

fn sum(ts: Vec<Term>) -> Term {
    ts.into_iter().reduce(|a, b| Term::binop("+", a, b)).unwrap_or_else(|| Term::int(0))
}

/// Coefficients of the unknowns and the remaining part of a normalized sum.
fn linear_form(t: &Term, unknowns: &[String]) -> Result<(BTreeMap<String, Vec<Term>>, Vec<Term>), LinearError> {
    let mut coefs: BTreeMap<String, Vec<Term>> = BTreeMap::new();
    let mut rest = Vec::new();
    let mut mons = Vec::new();
    flatten("+", t, &mut mons);
    for m in mons {
        let mut fs = Vec::new();
        flatten("*", m, &mut fs);
        let mut hit: Option<&str> = None;
        let mut others = Vec::new();
        for f in fs {
            match f.var_name().filter(|v| unknowns.iter().any(|u| u == v)) {
                Some(u) if hit.is_none() => hit = Some(u),
                Some(_) => return Err(LinearError::NotLinear(show(m))),
                None if unknowns.iter().any(|u| f.occurs(u)) => return Err(LinearError::NotLinear(show(f))),
                None => others.push(f.clone()),
            }
        }
        match hit {
            Some(u) => coefs.entry(u.to_string()).or_default().push(product(others)),
            None => rest.push(m.clone()),
        }
    }
    Ok((coefs, rest))
}

fn residual(eq: &Term) -> Term {
    match eq.as_equation() {
        Some((l, r)) => Term::binop("+", l.clone(), Term::binop("*", Term::int(-1), r.clone())),
        None => eq.clone(),
    }
}

/// Solves by isolating one unknown at a time, preferring numeric
/// coefficients, and substituting it everywhere else. Values are
/// normalized with `rs` and returned in the order of `unknowns`.
pub fn solve_linear_system(eqs: &[Term], unknowns: &[String], rs: &RuleSet) -> Result<Vec<(String, Term)>, LinearError> {
    let none = Inst::new();
    let mut pending: Vec<Term> = eqs.iter().map(|e| normalize(rs, &residual(e), &none)).collect::<Result<_, _>>()?;
    let mut solved: Vec<(String, Term)> = Vec::new();
    loop {
        let mut forms = Vec::new();
        let mut keep = Vec::new();
        for e in pending {
            let (coefs, rest) = linear_form(&e, unknowns)?;
            let mut live = BTreeMap::new();
            for (u, cs) in coefs {
                let c = normalize(rs, &sum(cs), &none)?;
                if !c.is_zero() {
                    live.insert(u, c);
                }
            }
            if live.is_empty() {
                if !normalize(rs, &sum(rest), &none)?.is_zero() {
                    return Err(LinearError::Unsolvable("inconsistent".into()));
                }
                continue;
            }
            forms.push(live);
            keep.push(e);
        }
        pending = keep;
        if pending.is_empty() {
            break;
        }
        let pick = |numeric: bool| {
            forms.iter().enumerate().find_map(|(i, f)| {
                unknowns
                    .iter()
                    .find(|u| f.get(*u).is_some_and(|c| !numeric || c.is_numeral()))
                    .map(|u| (i, u.clone(), f[u].clone()))
            })
        };
        let (i, u, c) = pick(true).or_else(|| pick(false)).expect("a live equation has an unknown");
        let e = pending.remove(i);
        let isolated = Term::binop(
            "*",
            Term::binop("+", Term::binop("*", c.clone(), Term::var(&u)), Term::binop("*", Term::int(-1), e)),
            Term::binop("^", c, Term::int(-1)),
        );
        let value = normalize(rs, &isolated, &none)?;
        let sub = BTreeMap::from([(u.clone(), value.clone())]);
        pending = pending.iter().map(|p| normalize(rs, &p.substitute(&sub), &none)).collect::<Result<_, _>>()?;
        for (_, v) in solved.iter_mut() {
            *v = normalize(rs, &v.substitute(&sub), &none)?;
        }
        solved.push((u, value));
    }
    let mut out = Vec::new();
    for u in unknowns {
        match solved.iter().find(|(v, _)| v == u) {
            Some(s) => out.push(s.clone()),
            None => return Err(LinearError::Unsolvable("underdetermined".into())),
        }
    }
    Ok(out)
}
