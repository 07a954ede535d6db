mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use common::kb;
use lucas_core::knowledge::KnowledgeBase;
use lucas_core::rewrite::{instantiate, match_term, normalize, normalize_steps, replay, Inst, Subst};
use lucas_core::terms::{parse, render, Term};
use num::{BigRational, One, Zero};
use proptest::prelude::*;

fn shared() -> &'static KnowledgeBase {
    static KB: OnceLock<KnowledgeBase> = OnceLock::new();
    KB.get_or_init(kb)
}

fn var() -> impl Strategy<Value = Term> {
    prop::sample::select(vec!["a", "b", "x", "y", "L"]).prop_map(Term::var)
}

fn poly() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![(-6i64..7).prop_map(Term::int), var()];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::binop("+", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::binop("*", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::binop("-", a, b)),
            (inner, 0i64..4).prop_map(|(a, n)| Term::binop("^", a, Term::int(n))),
        ]
    })
}

fn numeral_expr() -> impl Strategy<Value = Term> {
    let leaf = (-9i64..10).prop_map(Term::int);
    leaf.prop_recursive(4, 20, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::binop("+", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::binop("*", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::binop("-", a, b)),
            (inner.clone(), 1i64..9).prop_map(|(a, d)| Term::binop("/", a, Term::int(d))),
            (inner, 0i64..4).prop_map(|(a, n)| Term::binop("^", a, Term::int(n))),
        ]
    })
}

/// Exact value by direct recursion over the tree.
fn value(t: &Term) -> Option<BigRational> {
    if let Term::Num { value, .. } = t {
        return Some(BigRational::from_integer(value.clone()));
    }
    let (op, a, b) = ["+", "*", "-", "/", "^"].iter().find_map(|op| t.as_binop(op).map(|(a, b)| (*op, a, b)))?;
    let (x, y) = (value(a)?, value(b)?);
    Some(match op {
        "+" => x + y,
        "*" => x * y,
        "-" => x - y,
        "/" if y.is_zero() => return None,
        "/" => x / y,
        _ => {
            let n: u32 = y.to_integer().try_into().ok()?;
            (0..n).fold(BigRational::one(), |acc, _| acc * &x)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn render_then_parse_is_identity(t in poly()) {
        let sig = &shared().signature;
        let back = parse(&render(&t, sig), sig).unwrap().stripped();
        prop_assert_eq!(back, t.stripped());
    }

    #[test]
    fn replacing_a_subterm_by_itself_changes_nothing(t in poly(), k in any::<prop::sample::Index>(), w in var()) {
        let ps = t.positions();
        let p = &ps[k.index(ps.len())];
        let sub = t.subterm_at(p).unwrap().clone();
        prop_assert_eq!(&t.replace_at(p, sub).unwrap(), &t);
        let swapped = t.replace_at(p, w.clone()).unwrap();
        prop_assert_eq!(swapped.subterm_at(p).unwrap(), &w);
        for q in &ps {
            if !q.starts_with(p) && !p.starts_with(q) {
                prop_assert_eq!(swapped.subterm_at(q).unwrap(), t.subterm_at(q).unwrap());
            }
        }
    }

    #[test]
    fn matching_is_sound(pat in poly(), a in poly(), b in poly(), t in poly()) {
        let vars: Vec<String> = pat.free_vars().into_iter().collect();
        let sigma: Subst = vars.iter().enumerate().map(|(i, v)| (v.clone(), if i % 2 == 0 { a.clone() } else { b.clone() })).collect();
        let inst = Inst::new();
        let target = instantiate(&pat, &sigma, &inst);
        let found = match_term(&pat, &target, &inst);
        prop_assert!(found.is_some());
        prop_assert_eq!(instantiate(&pat, &found.unwrap(), &inst), target);
        if let Some(s) = match_term(&pat, &t, &inst) {
            prop_assert_eq!(instantiate(&pat, &s, &inst), t);
        }
    }

    #[test]
    fn normalize_is_idempotent(t in poly()) {
        let rs = shared().rule_set("make_polynomial").unwrap();
        let inst = Inst::new();
        let once = normalize(&rs, &t, &inst).unwrap();
        prop_assert_eq!(normalize(&rs, &once, &inst).unwrap(), once);
    }

    #[test]
    fn numerals_evaluate_exactly(t in numeral_expr()) {
        let exact = value(&t);
        prop_assume!(exact.is_some());
        let rs = shared().rule_set("make_polynomial").unwrap();
        let got = normalize(&rs, &t, &Inst::new()).unwrap();
        prop_assert_eq!(got.as_numeral(), exact, "{}", render(&got, &shared().signature));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn traces_replay_to_the_result(t in poly()) {
        let rs = shared().rule_set("make_polynomial").unwrap();
        let inst = Inst::new();
        let (result, trace) = normalize_steps(&rs, &t, &inst).unwrap();
        prop_assert_eq!(replay(&rs, &t, &trace, &inst).unwrap(), result);
    }
}

fn problem_ids(kb: &KnowledgeBase) -> Vec<String> {
    kb.problems.keys().cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn closure_grows_with_its_goals(mask_a in any::<u16>(), mask_b in any::<u16>()) {
        let kb = shared();
        let ids = problem_ids(kb);
        let pick = |m: u16| -> Vec<String> { ids.iter().enumerate().filter(|(i, _)| m >> (i % 16) & 1 == 1).map(|(_, k)| k.clone()).collect() };
        let a = pick(mask_a);
        let mut ab = a.clone();
        ab.extend(pick(mask_b));
        let small: BTreeSet<_> = kb.knowledge_closure(&a).unwrap().into_iter().collect();
        let big = kb.knowledge_closure(&ab).unwrap();
        let bigset: BTreeSet<_> = big.iter().cloned().collect();
        prop_assert!(small.is_subset(&bigset));
        prop_assert_eq!(big.len(), bigset.len());
    }
}
