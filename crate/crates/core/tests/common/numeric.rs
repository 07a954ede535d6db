//! Floating-point evaluation of terms, independent of the rewrite engine.

use std::collections::BTreeMap;

use lucas_core::terms::Term;
use num::ToPrimitive;

pub type Env = BTreeMap<String, f64>;

fn name_value(name: &str, seed: u64) -> f64 {
    let mut h: u64 = 1469598103934665603 ^ seed;
    for b in name.bytes() {
        h = (h ^ b as u64).wrapping_mul(1099511628211);
    }
    0.5 + (h % 10_000) as f64 / 4_000.0
}

/// Deterministic pseudo-random value assignment for free names.
pub struct Point {
    pub seed: u64,
    pub fixed: Env,
}

impl Point {
    fn var(&self, n: &str) -> f64 {
        self.fixed.get(n).copied().unwrap_or_else(|| name_value(n, self.seed))
    }

    fn with(&self, n: &str, v: f64) -> Point {
        let mut fixed = self.fixed.clone();
        fixed.insert(n.to_string(), v);
        Point { seed: self.seed, fixed }
    }

    pub fn scalar(&self, t: &Term) -> Option<f64> {
        let v = match t {
            Term::Num { value, .. } => value.to_f64()?,
            Term::Var { name, .. } => self.var(name),
            Term::Const { name, .. } => match name.as_str() {
                "pi" => std::f64::consts::PI,
                _ => return None,
            },
            Term::App { head, args, .. } => {
                if let Term::Var { name, .. } = head.as_ref() {
                    let mut acc = name_value(name, self.seed);
                    for (i, a) in args.iter().enumerate() {
                        acc += ((i + 1) as f64 * 0.7 + name_value(name, 7)) * self.scalar(a)?.sin();
                    }
                    return Some(acc);
                }
                let Term::Const { name, .. } = head.as_ref() else { return None };
                match (name.as_str(), args.as_slice()) {
                    ("+", [a, b]) => self.scalar(a)? + self.scalar(b)?,
                    ("-", [a, b]) => self.scalar(a)? - self.scalar(b)?,
                    ("-", [a]) => -self.scalar(a)?,
                    ("*", [a, b]) => self.scalar(a)? * self.scalar(b)?,
                    ("/", [a, b]) => self.scalar(a)? / self.scalar(b)?,
                    ("^", [a, b]) => self.scalar(a)?.powf(self.scalar(b)?),
                    ("sin", [a]) => self.scalar(a)?.sin(),
                    ("cos", [a]) => self.scalar(a)?.cos(),
                    ("sqrt", [a]) => self.scalar(a)?.sqrt(),
                    ("d/d", [Term::Var { name: x, .. }, body]) => {
                        let h = 1e-4;
                        let x0 = self.var(x);
                        let f = |v| self.with(x, v).scalar(body);
                        (f(x0 + h)? - f(x0 - h)?) / (2.0 * h)
                    }
                    ("Integrate", [body, Term::Var { name: x, .. }]) => {
                        let n = 64;
                        let x1 = self.var(x);
                        let hs = x1 / n as f64;
                        let mut s = 0.0;
                        for i in 0..=n {
                            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                            s += w * self.with(x, i as f64 * hs).scalar(body)?;
                        }
                        s * hs / 3.0
                    }
                    _ => return None,
                }
            }
        };
        v.is_finite().then_some(v)
    }

    /// Values of a scalar, equation or list of those.
    pub fn values(&self, t: &Term) -> Option<Vec<f64>> {
        if let Some(xs) = t.as_list() {
            let mut out = Vec::new();
            for x in xs {
                out.extend(self.values(x)?);
            }
            return Some(out);
        }
        if let Some((a, b)) = t.as_equation() {
            return Some(vec![self.scalar(a)? - self.scalar(b)?]);
        }
        Some(vec![self.scalar(t)?])
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-5 * a.abs().max(b.abs()).max(1.0)
}

/// Equal at several points. `None` when some point cannot be evaluated.
pub fn equivalent(a: &Term, b: &Term) -> Option<bool> {
    for seed in [3, 11, 29] {
        let p = Point { seed, fixed: Env::new() };
        let (x, y) = (p.values(a)?, p.values(b)?);
        if x.len() != y.len() || !x.iter().zip(&y).all(|(u, v)| close(*u, *v)) {
            return Some(false);
        }
    }
    Some(true)
}
