use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::signature::{DERIV, LIST, NEG};
use super::types::Type;
use super::TermError;

/// Byte range into the source text a term was parsed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Key of the knowledge item a constant refers to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub theory: String,
    pub name: String,
}

/// Annotations that never take part in term equality.
#[derive(Debug, Clone, Default)]
pub struct Meta {
    pub span: Option<Span>,
    pub ty: Option<Type>,
    pub bound: bool,
    pub link: Option<Link>,
}

impl PartialEq for Meta {
    fn eq(&self, _: &Meta) -> bool {
        true
    }
}

impl Eq for Meta {}

impl Hash for Meta {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// Child index path: `0` addresses the head of an application, `i >= 1`
/// its `i`-th argument.
pub type Path = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Const {
        name: String,
        #[serde(skip)]
        meta: Meta,
    },
    Num {
        value: BigInt,
        #[serde(skip)]
        meta: Meta,
    },
    Var {
        name: String,
        #[serde(skip)]
        meta: Meta,
    },
    App {
        head: Box<Term>,
        args: Vec<Term>,
        #[serde(skip)]
        meta: Meta,
    },
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const { name: name.to_string(), meta: Meta::default() }
    }

    pub fn var(name: &str) -> Term {
        Term::Var { name: name.to_string(), meta: Meta::default() }
    }

    pub fn int(value: impl Into<BigInt>) -> Term {
        Term::Num { value: value.into(), meta: Meta::default() }
    }

    pub fn app(head: Term, args: Vec<Term>) -> Term {
        Term::App { head: Box::new(head), args, meta: Meta::default() }
    }

    pub fn call(name: &str, args: Vec<Term>) -> Term {
        Term::app(Term::constant(name), args)
    }

    pub fn binop(op: &str, a: Term, b: Term) -> Term {
        Term::call(op, vec![a, b])
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::call(LIST, items)
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::binop("=", a, b)
    }

    pub fn deriv(var: &str, body: Term) -> Term {
        let mut v = Term::var(var);
        v.meta_mut().bound = true;
        Term::call(DERIV, vec![v, body])
    }

    pub fn truth(b: bool) -> Term {
        Term::constant(if b { "true" } else { "false" })
    }

    /// Canonical numeral for a rational: an integer literal, or the quotient
    /// `p / q` of integer literals with `q > 1` and `gcd(p, q) = 1`.
    pub fn numeral(r: &BigRational) -> Term {
        if r.is_integer() {
            Term::int(r.to_integer())
        } else {
            Term::binop("/", Term::int(r.numer().clone()), Term::int(r.denom().clone()))
        }
    }

    /// Value of a canonical numeral.
    pub fn as_numeral(&self) -> Option<BigRational> {
        match self {
            Term::Num { value, .. } => Some(BigRational::from_integer(value.clone())),
            Term::App { head, args, .. } if head.is_const("/") && args.len() == 2 => {
                match (&args[0], &args[1]) {
                    (Term::Num { value: p, .. }, Term::Num { value: q, .. }) => {
                        if !q.is_positive() || q.is_one() {
                            return None;
                        }
                        let r = BigRational::new(p.clone(), q.clone());
                        (r.numer() == p && r.denom() == q).then_some(r)
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    pub fn is_numeral(&self) -> bool {
        self.as_numeral().is_some()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Term::Num { value, .. } if value.is_zero())
    }

    pub fn meta(&self) -> &Meta {
        match self {
            Term::Const { meta, .. }
            | Term::Num { meta, .. }
            | Term::Var { meta, .. }
            | Term::App { meta, .. } => meta,
        }
    }

    pub fn meta_mut(&mut self) -> &mut Meta {
        match self {
            Term::Const { meta, .. }
            | Term::Num { meta, .. }
            | Term::Var { meta, .. }
            | Term::App { meta, .. } => meta,
        }
    }

    pub fn ty(&self) -> Option<&Type> {
        self.meta().ty.as_ref()
    }

    pub fn is_const(&self, name: &str) -> bool {
        matches!(self, Term::Const { name: n, .. } if n == name)
    }

    /// Name of the variable heading an application `f a`.
    pub fn head_var(&self) -> Option<&str> {
        match self {
            Term::App { head, .. } => head.var_name(),
            _ => None,
        }
    }

    pub fn var_name(&self) -> Option<&str> {
        match self {
            Term::Var { name, .. } => Some(name),
            _ => None,
        }
    }

    /// Name of the constant heading an application.
    pub fn head_name(&self) -> Option<&str> {
        match self {
            Term::App { head, .. } => match head.as_ref() {
                Term::Const { name, .. } => Some(name),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App { args, .. } => args,
            _ => &[],
        }
    }

    pub fn is_app_of(&self, name: &str, arity: usize) -> bool {
        self.head_name() == Some(name) && self.args().len() == arity
    }

    /// Arguments of `a op b`.
    pub fn as_binop(&self, op: &str) -> Option<(&Term, &Term)> {
        if self.is_app_of(op, 2) {
            let a = self.args();
            Some((&a[0], &a[1]))
        } else {
            None
        }
    }

    pub fn as_equation(&self) -> Option<(&Term, &Term)> {
        self.as_binop("=")
    }

    pub fn as_list(&self) -> Option<&[Term]> {
        (self.head_name() == Some(LIST)).then(|| self.args())
    }

    pub fn is_neg(&self) -> bool {
        self.is_app_of(NEG, 1)
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::App { head, args, .. } => {
                let mut v = vec![head.as_ref()];
                v.extend(args.iter());
                v
            }
            _ => Vec::new(),
        }
    }

    fn child(&self, i: usize) -> Option<&Term> {
        match self {
            Term::App { head, args, .. } => {
                if i == 0 {
                    Some(head)
                } else {
                    args.get(i - 1)
                }
            }
            _ => None,
        }
    }

    fn child_mut(&mut self, i: usize) -> Option<&mut Term> {
        match self {
            Term::App { head, args, .. } => {
                if i == 0 {
                    Some(head)
                } else {
                    args.get_mut(i - 1)
                }
            }
            _ => None,
        }
    }

    pub fn subterm_at(&self, path: &[usize]) -> Result<&Term, TermError> {
        let mut cur = self;
        for &i in path {
            cur = cur.child(i).ok_or_else(|| TermError::InvalidPath(path.to_vec()))?;
        }
        Ok(cur)
    }

    /// Returns a copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[usize], with: Term) -> Result<Term, TermError> {
        let mut out = self.clone();
        let mut cur = &mut out;
        for &i in path {
            cur = cur.child_mut(i).ok_or_else(|| TermError::InvalidPath(path.to_vec()))?;
        }
        *cur = with;
        clear_types(&mut out, path);
        Ok(out)
    }

    /// All valid paths in preorder.
    pub fn positions(&self) -> Vec<Path> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        collect_positions(self, &mut prefix, &mut out);
        out
    }

    /// Paths in leftmost-innermost order: children before parents, heads and
    /// arguments left to right. Constant heads are skipped.
    pub fn innermost_positions(&self) -> Vec<Path> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        collect_innermost(self, &mut prefix, &mut out);
        out
    }

    pub fn size(&self) -> usize {
        match self {
            Term::App { head, args, .. } => 1 + head.size() + args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Free variable names. The variable slot of a derivative binds.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_vars(self, &mut out);
        out
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            Term::Var { name, .. } => name == var,
            Term::App { head, args, .. } => head.occurs(var) || args.iter().any(|a| a.occurs(var)),
            _ => false,
        }
    }

    pub fn contains(&self, sub: &Term) -> bool {
        if self == sub {
            return true;
        }
        match self {
            Term::App { head, args, .. } => head.contains(sub) || args.iter().any(|a| a.contains(sub)),
            _ => false,
        }
    }

    /// Simultaneous substitution of free variables.
    pub fn substitute(&self, bindings: &BTreeMap<String, Term>) -> Term {
        if bindings.is_empty() {
            return self.clone();
        }
        match self {
            Term::Var { name, .. } => bindings.get(name).cloned().unwrap_or_else(|| self.clone()),
            Term::App { head, args, meta } => {
                if head.is_const(DERIV) && args.len() == 2 {
                    if let Some(v) = args[0].var_name() {
                        if bindings.contains_key(v) {
                            let mut inner = bindings.clone();
                            inner.remove(v);
                            return Term::App {
                                head: head.clone(),
                                args: vec![args[0].clone(), args[1].substitute(&inner)],
                                meta: Meta { ty: meta.ty.clone(), ..Meta::default() },
                            };
                        }
                    }
                }
                Term::App {
                    head: Box::new(head.substitute(bindings)),
                    args: args.iter().map(|a| a.substitute(bindings)).collect(),
                    meta: Meta { ty: meta.ty.clone(), ..Meta::default() },
                }
            }
            _ => self.clone(),
        }
    }

    /// Replaces every occurrence of `from` by `to`.
    pub fn replace_all(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::App { head, args, .. } => Term::app(
                head.replace_all(from, to),
                args.iter().map(|a| a.replace_all(from, to)).collect(),
            ),
            _ => self.clone(),
        }
    }

    /// Drops spans, types and links, keeping the structure.
    pub fn stripped(&self) -> Term {
        match self {
            Term::Const { name, .. } => Term::constant(name),
            Term::Var { name, meta } => {
                let mut v = Term::var(name);
                v.meta_mut().bound = meta.bound;
                v
            }
            Term::Num { value, .. } => Term::int(value.clone()),
            Term::App { head, args, .. } => Term::app(head.stripped(), args.iter().map(Term::stripped).collect()),
        }
    }
}

fn clear_types(t: &mut Term, path: &[usize]) {
    t.meta_mut().ty = None;
    t.meta_mut().span = None;
    if let Some((&i, rest)) = path.split_first() {
        if let Some(c) = t.child_mut(i) {
            clear_types(c, rest);
        }
    }
}

fn collect_positions(t: &Term, prefix: &mut Path, out: &mut Vec<Path>) {
    out.push(prefix.clone());
    if let Term::App { head, args, .. } = t {
        prefix.push(0);
        collect_positions(head, prefix, out);
        prefix.pop();
        for (i, a) in args.iter().enumerate() {
            prefix.push(i + 1);
            collect_positions(a, prefix, out);
            prefix.pop();
        }
    }
}

fn collect_innermost(t: &Term, prefix: &mut Path, out: &mut Vec<Path>) {
    if let Term::App { head, args, .. } = t {
        if !matches!(head.as_ref(), Term::Const { .. }) {
            prefix.push(0);
            collect_innermost(head, prefix, out);
            prefix.pop();
        }
        for (i, a) in args.iter().enumerate() {
            prefix.push(i + 1);
            collect_innermost(a, prefix, out);
            prefix.pop();
        }
    }
    out.push(prefix.clone());
}

fn collect_vars(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Var { name, .. } => {
            out.insert(name.clone());
        }
        Term::App { head, args, .. } => {
            if head.is_const(DERIV) && args.len() == 2 {
                if let Some(v) = args[0].var_name() {
                    let mut inner = BTreeSet::new();
                    collect_vars(&args[1], &mut inner);
                    // the differentiation variable stays visible outside: `d/dx f`
                    // is still a function of x
                    inner.insert(v.to_string());
                    out.extend(inner);
                    return;
                }
            }
            collect_vars(head, out);
            for a in args {
                collect_vars(a, out);
            }
        }
        _ => {}
    }
}

/// Structural total order used for canonical forms: numerals first, then
/// constants, variables, and applications, each group ordered by content.
pub fn term_cmp(a: &Term, b: &Term) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    fn rank(t: &Term) -> u8 {
        if t.is_numeral() {
            return 0;
        }
        match t {
            Term::Num { .. } => 0,
            Term::Const { .. } => 1,
            Term::Var { .. } => 2,
            Term::App { .. } => 3,
        }
    }
    let (ra, rb) = (rank(a), rank(b));
    if ra != rb {
        return ra.cmp(&rb);
    }
    if let (Some(x), Some(y)) = (a.as_numeral(), b.as_numeral()) {
        return x.cmp(&y);
    }
    match (a, b) {
        (Term::Const { name: x, .. }, Term::Const { name: y, .. }) => x.cmp(y),
        (Term::Var { name: x, .. }, Term::Var { name: y, .. }) => x.cmp(y),
        (Term::App { head: h1, args: a1, .. }, Term::App { head: h2, args: a2, .. }) => {
            match term_cmp(h1, h2) {
                Ordering::Equal => {}
                o => return o,
            }
            match a1.len().cmp(&a2.len()) {
                Ordering::Equal => {}
                o => return o,
            }
            for (x, y) in a1.iter().zip(a2) {
                match term_cmp(x, y) {
                    Ordering::Equal => {}
                    o => return o,
                }
            }
            Ordering::Equal
        }
        _ => Ordering::Equal,
    }
}
