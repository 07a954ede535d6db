//! Cantilever under uniform load, solved on exact rational polynomials.

use std::collections::BTreeMap;

use lucas_core::terms::Term;
use num::{BigInt, BigRational, One, ToPrimitive, Zero};

pub type Q = BigRational;
/// Coefficients, lowest degree first.
pub type Poly = Vec<Q>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn integrate(p: &Poly, constant: Q) -> Poly {
    let mut out = vec![constant];
    for (i, c) in p.iter().enumerate() {
        out.push(c / q(i as i64 + 1));
    }
    out
}

pub fn eval(p: &Poly, x: &Q) -> Q {
    p.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
}

fn scale(p: &Poly, k: &Q) -> Poly {
    p.iter().map(|c| c * k).collect()
}

/// Deflection `y` for `V' = -q0`, `M' = V`, `y'' = -M / EI` with
/// `V(0) = q0 L`, `M(L) = 0`, `y'(0) = 0`, `y(0) = 0`.
pub fn deflection(l: &Q, q0: &Q, ei: &Q) -> Poly {
    let v = vec![q0 * l, -q0.clone()];
    let m0 = integrate(&v, Q::zero());
    let m = integrate(&v, -eval(&m0, l));
    let curvature = scale(&m, &(-Q::one() / ei));
    let slope = integrate(&curvature, Q::zero());
    integrate(&slope, Q::zero())
}

/// Exact value of an arithmetic term; ignores nothing, fails on anything
/// but numerals, bound names and `+ - * / ^` with integer exponents.
pub fn exact(t: &Term, env: &BTreeMap<String, Q>) -> Option<Q> {
    match t {
        Term::Num { value, .. } => Some(Q::from_integer(value.clone())),
        Term::Var { name, .. } => env.get(name).cloned(),
        Term::App { head, args, .. } => {
            let Term::Const { name, .. } = head.as_ref() else { return None };
            match (name.as_str(), args.as_slice()) {
                ("+", [a, b]) => Some(exact(a, env)? + exact(b, env)?),
                ("-", [a, b]) => Some(exact(a, env)? - exact(b, env)?),
                ("-", [a]) => Some(-exact(a, env)?),
                ("*", [a, b]) => Some(exact(a, env)? * exact(b, env)?),
                ("/", [a, b]) => {
                    let d = exact(b, env)?;
                    (!d.is_zero()).then(|| exact(a, env).map(|n| n / d))?
                }
                ("^", [a, b]) => {
                    let base = exact(a, env)?;
                    let e = exact(b, env)?;
                    if !e.is_integer() {
                        return None;
                    }
                    let n = e.to_integer().to_i32()?;
                    if n < 0 && base.is_zero() {
                        return None;
                    }
                    let p = num::pow(base.clone(), n.unsigned_abs() as usize);
                    Some(if n.is_negative() { p.recip() } else { p })
                }
                _ => None,
            }
        }
        _ => None,
    }
}
