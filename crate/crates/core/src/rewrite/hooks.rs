//! Built-in evaluation steps. Each applies to one node and either returns
//! a different replacement term or declines.

use std::cmp::Ordering;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::knowledge::Hook;
use crate::terms::{term_cmp, Term, NEG};

use super::Inst;

const MAX_EXPONENT: i64 = 512;

pub fn apply_hook(hook: Hook, t: &Term, inst: &Inst) -> Option<Term> {
    let bdv = inst.get("bdv").and_then(|v| v.var_name()).map(str::to_string);
    let out = match hook {
        Hook::Arith => arith(t),
        Hook::Predicates => predicate(t),
        Hook::OrderProduct => order_product(t, bdv.as_deref()),
        Hook::OrderSum => order_sum(t, bdv.as_deref()),
    }?;
    (out != *t).then_some(out)
}

fn numerals(t: &Term) -> Option<Vec<BigRational>> {
    t.args().iter().map(Term::as_numeral).collect()
}

fn pow(base: &BigRational, exp: &BigRational) -> Option<BigRational> {
    if !exp.is_integer() {
        return None;
    }
    let e = exp.to_integer().to_i64()?;
    if e.abs() > MAX_EXPONENT {
        return None;
    }
    if e < 0 && base.is_zero() {
        return None;
    }
    let mut acc = BigRational::one();
    for _ in 0..e.abs() {
        acc *= base;
    }
    Some(if e < 0 { acc.recip() } else { acc })
}

fn arith(t: &Term) -> Option<Term> {
    let op = t.head_name()?;
    let vals = numerals(t)?;
    let value = match (op, vals.as_slice()) {
        ("+", [a, b]) => a + b,
        ("-", [a, b]) => a - b,
        ("*", [a, b]) => a * b,
        ("/", [a, b]) => {
            if b.is_zero() {
                return None;
            }
            a / b
        }
        ("^", [a, b]) => pow(a, b)?,
        (NEG, [a]) => -a,
        ("<", [a, b]) => return Some(Term::truth(a < b)),
        (">", [a, b]) => return Some(Term::truth(a > b)),
        ("<=", [a, b]) => return Some(Term::truth(a <= b)),
        (">=", [a, b]) => return Some(Term::truth(a >= b)),
        ("=", [a, b]) => return Some(Term::truth(a == b)),
        ("~=", [a, b]) => return Some(Term::truth(a != b)),
        _ => return None,
    };
    Some(Term::numeral(&value))
}

fn var_arg(t: &Term) -> Option<&str> {
    t.var_name()
}

fn predicate(t: &Term) -> Option<Term> {
    let name = t.head_name()?;
    let args = t.args();
    match (name, args) {
        ("free_of", [e, v]) => Some(Term::truth(!e.occurs(var_arg(v)?))),
        ("occurs_in", [v, e]) => Some(Term::truth(e.occurs(var_arg(v)?))),
        ("is_numeral", [e]) => Some(Term::truth(e.is_numeral())),
        ("is_int", [e]) => Some(Term::truth(matches!(e, Term::Num { .. }))),
        ("is_const_expr", [e]) => Some(Term::truth(is_const_expr(e))),
        ("is_polynomial_in", [e, v]) => {
            let v = var_arg(v)?;
            Some(Term::truth(sides(e).iter().all(|s| degree(s, v).is_some())))
        }
        ("degree_in", [e, v]) => {
            let v = var_arg(v)?;
            let mut d = BigRational::zero();
            for s in sides(e) {
                d = d.max(degree(s, v)?);
            }
            Some(Term::numeral(&d))
        }
        ("has_root_in", [e, v]) => Some(Term::truth(has_root(e, var_arg(v)?))),
        ("has_fraction_in", [e, v]) => Some(Term::truth(has_fraction(e, var_arg(v)?))),
        ("not", [e]) if e.is_const("true") => Some(Term::truth(false)),
        ("not", [e]) if e.is_const("false") => Some(Term::truth(true)),
        ("last", [l]) => l.as_list()?.last().cloned(),
        ("nth", [n, l]) => {
            let items = l.as_list()?;
            let Term::Num { value, .. } = n else { return None };
            let i = value.to_usize()?;
            (i >= 1).then(|| items.get(i - 1).cloned()).flatten()
        }
        ("length", [l]) => Some(Term::int(BigInt::from(l.as_list()?.len()))),
        ("lhs", [e]) => e.as_equation().map(|(l, _)| l.clone()),
        ("rhs", [e]) => e.as_equation().map(|(_, r)| r.clone()),
        _ => None,
    }
}

fn sides(e: &Term) -> Vec<&Term> {
    match e.as_equation() {
        Some((l, r)) => vec![l, r],
        None => vec![e],
    }
}

fn is_const_expr(e: &Term) -> bool {
    if e.is_numeral() {
        return true;
    }
    match e {
        Term::Num { .. } | Term::Var { .. } => true,
        Term::Const { .. } => false,
        Term::App { .. } => match e.head_name() {
            Some("+" | "-" | "*" | "/" | "^" | NEG) => e.args().iter().all(is_const_expr),
            _ => false,
        },
    }
}

/// Polynomial degree of `e` in `v`, `None` when `e` is not a polynomial in `v`.
pub fn degree(e: &Term, v: &str) -> Option<BigRational> {
    if !e.occurs(v) {
        return Some(BigRational::zero());
    }
    if e.var_name() == Some(v) {
        return Some(BigRational::one());
    }
    let args = e.args();
    match (e.head_name()?, args) {
        ("+" | "-", [a, b]) => Some(degree(a, v)?.max(degree(b, v)?)),
        ("*", [a, b]) => Some(degree(a, v)? + degree(b, v)?),
        (NEG, [a]) => degree(a, v),
        ("/", [a, b]) if !b.occurs(v) => degree(a, v),
        ("^", [a, n]) => {
            let Term::Num { value, .. } = n else { return None };
            if value.is_negative() {
                return None;
            }
            Some(degree(a, v)? * BigRational::from_integer(value.clone()))
        }
        _ => None,
    }
}

fn has_root(e: &Term, v: &str) -> bool {
    let here = match (e.head_name(), e.args()) {
        (Some("sqrt"), [u]) => u.occurs(v),
        (Some("^"), [u, n]) => u.occurs(v) && n.as_numeral().map(|r| !r.is_integer()).unwrap_or(false),
        _ => false,
    };
    here || e.children().into_iter().any(|c| has_root(c, v))
}

fn has_fraction(e: &Term, v: &str) -> bool {
    let here = match (e.head_name(), e.args()) {
        (Some("/"), [_, b]) => b.occurs(v),
        (Some("^"), [b, n]) => b.occurs(v) && n.as_numeral().map(|r| r.is_negative()).unwrap_or(false),
        _ => false,
    };
    here || e.children().into_iter().any(|c| has_fraction(c, v))
}

fn flatten<'a>(t: &'a Term, op: &str, out: &mut Vec<&'a Term>) {
    match t.as_binop(op) {
        Some((a, b)) => {
            flatten(a, op, out);
            flatten(b, op, out);
        }
        None => out.push(t),
    }
}

fn fold(op: &str, items: Vec<Term>, empty: Term) -> Term {
    let mut it = items.into_iter();
    match it.next() {
        None => empty,
        Some(first) => it.fold(first, |acc, x| Term::binop(op, acc, x)),
    }
}

/// `(base, exponent)` of a factor; non-numeral exponents keep the whole
/// power as base.
fn split_power(f: &Term) -> (Term, BigRational) {
    if let Some((b, e)) = f.as_binop("^") {
        if let Some(r) = e.as_numeral() {
            if !b.is_numeral() {
                return (b.clone(), r);
            }
        }
    }
    (f.clone(), BigRational::one())
}

fn factor_cmp(a: &Term, b: &Term, bdv: Option<&str>) -> Ordering {
    if let Some(v) = bdv {
        match a.occurs(v).cmp(&b.occurs(v)) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    term_cmp(a, b)
}

fn power_term(base: Term, exp: &BigRational) -> Term {
    if exp.is_one() {
        base
    } else {
        Term::binop("^", base, Term::numeral(exp))
    }
}

fn build_product(coef: &BigRational, factors: Vec<Term>) -> Term {
    if coef.is_zero() {
        return Term::int(0);
    }
    let mut items = Vec::new();
    if !coef.is_one() || factors.is_empty() {
        items.push(Term::numeral(coef));
    }
    items.extend(factors);
    fold("*", items, Term::int(1))
}

/// Numeral coefficient and ordered `(base, exponent)` list of a product.
fn product_parts(t: &Term, bdv: Option<&str>) -> (BigRational, Vec<(Term, BigRational)>) {
    let mut items = Vec::new();
    flatten(t, "*", &mut items);
    let mut coef = BigRational::one();
    let mut powers: Vec<(Term, BigRational)> = Vec::new();
    for f in items {
        if let Some(r) = f.as_numeral() {
            coef *= r;
            continue;
        }
        let (base, exp) = split_power(f);
        match powers.iter_mut().find(|(b, _)| *b == base) {
            Some((_, e)) => *e += exp,
            None => powers.push((base, exp)),
        }
    }
    powers.retain(|(_, e)| !e.is_zero());
    powers.sort_by(|(a, _), (b, _)| factor_cmp(a, b, bdv));
    (coef, powers)
}

fn order_product(t: &Term, bdv: Option<&str>) -> Option<Term> {
    t.as_binop("*")?;
    let (coef, powers) = product_parts(t, bdv);
    Some(build_product(&coef, powers.into_iter().map(|(b, e)| power_term(b, &e)).collect()))
}

struct Monomial {
    coef: BigRational,
    factors: Vec<Term>,
    bdv_degree: BigRational,
    total_degree: BigRational,
}

fn monomial(s: &Term, bdv: Option<&str>) -> Monomial {
    let mut items = Vec::new();
    flatten(s, "*", &mut items);
    let mut coef = BigRational::one();
    let mut factors = Vec::new();
    let mut bdv_degree = BigRational::zero();
    let mut total_degree = BigRational::zero();
    for f in items {
        if let Some(r) = f.as_numeral() {
            coef *= r;
            continue;
        }
        let (base, exp) = split_power(f);
        if bdv.is_some() && base.var_name() == bdv {
            bdv_degree += &exp;
        }
        total_degree += exp;
        factors.push(f.clone());
    }
    Monomial { coef, factors, bdv_degree, total_degree }
}

fn order_sum(t: &Term, bdv: Option<&str>) -> Option<Term> {
    t.as_binop("+")?;
    let mut items = Vec::new();
    flatten(t, "+", &mut items);
    let mut groups: Vec<Monomial> = Vec::new();
    for s in items {
        let m = monomial(s, bdv);
        match groups.iter_mut().find(|g| g.factors == m.factors) {
            Some(g) => g.coef += m.coef,
            None => groups.push(m),
        }
    }
    groups.retain(|g| !g.coef.is_zero());
    groups.sort_by(|a, b| {
        a.bdv_degree
            .cmp(&b.bdv_degree)
            .then_with(|| a.total_degree.cmp(&b.total_degree))
            .then_with(|| {
                let ma = fold("*", a.factors.clone(), Term::int(1));
                let mb = fold("*", b.factors.clone(), Term::int(1));
                term_cmp(&ma, &mb)
            })
    });
    let summands = groups.into_iter().map(|g| build_product(&g.coef, g.factors)).collect();
    Some(fold("+", summands, Term::int(0)))
}
