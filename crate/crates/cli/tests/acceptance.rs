//! Runs every acceptance criterion and prints one PASS/FAIL line each.

#[path = "../../core/tests/common/mod.rs"]
#[allow(dead_code, unused_imports)]
mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::beam::{deflection, eval, exact, q, Q};
use common::numeric::equivalent;
use common::{instance, kb, root, session, solved, term, GOLDEN};
use http_body_util::BodyExt;
use lucas_core::interpreter::*;
use lucas_core::knowledge::KnowledgeBase;
use lucas_core::program::Tactic;
use lucas_core::rewrite::{eval_pred, instantiate, normalize, normalize_steps, replay, rewrite_at, Inst, Truth};
use lucas_core::specification::{check_postcondition, match_pattern, refine, ProblemInstance};
use lucas_core::terms::{render, Term};
use lucas_service::{router, AppState, Config};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use tower::ServiceExt;

const ORACLE_Y: &str = "q_0 / (24 * EI) * (6 * L ^ 2 * x ^ 2 - 4 * L * x ^ 3 + x ^ 4)";

fn norm(kb: &KnowledgeBase, t: &Term) -> Term {
    normalize(&kb.rule_set("make_polynomial").unwrap(), t, &Inst::new()).unwrap()
}

fn lucas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lucas")).current_dir(root()).env_remove("LUCAS_KB").env_remove("LUCAS_INSTANCES").args(args).output().unwrap()
}

fn nested(b: &ProblemBlock) -> Vec<&ProblemBlock> {
    b.solution.iter().filter_map(|i| if let CalcItem::Problem(p) = i { Some(p) } else { None }).collect()
}

fn golden_beam() {
    let kb = kb();
    let t0 = Instant::now();
    let s = solved(&kb, "biegelinie");
    let elapsed = t0.elapsed().as_secs_f64();
    let tree = s.tree().unwrap();
    let subs: Vec<String> = nested(&tree.root).iter().map(|p| p.problem.join(",")).collect();
    assert_eq!(subs, ["vonBelastungZu,Biegelinien", "setzeRandbedingungen,Biegelinien", "LINEAR,system"]);
    let system = term(&kb, nested(&tree.root)[2].result.as_deref().unwrap());
    let want = term(&kb, "[c = L * q_0, c_2 = -1 / 2 * L ^ 2 * q_0, c_3 = 0, c_4 = 0]");
    assert_eq!(norm(&kb, &system), norm(&kb, &want));
    let y = term(&kb, tree.root.result.as_deref().unwrap());
    assert_eq!(norm(&kb, &y), norm(&kb, &term(&kb, &format!("y x = {ORACLE_Y}"))));
    let (_, rhs) = y.as_equation().unwrap();
    for (l, q0, ei) in [(q(3), q(2), Q::new(5.into(), 2.into())), (q(7), q(-4), q(11))] {
        let oracle = deflection(&l, &q0, &ei);
        for xi in 0..5 {
            let x = Q::new(xi.into(), 2.into());
            let env = BTreeMap::from([("L".into(), l.clone()), ("q_0".into(), q0.clone()), ("EI".into(), ei.clone()), ("x".into(), x.clone())]);
            assert_eq!(exact(rhs, &env).unwrap(), eval(&oracle, &x));
        }
    }
    assert!(elapsed < 1.0, "took {elapsed:.3} s");
}

fn postcondition() {
    let kb = kb();
    let inst = instance(&kb, "biegelinie");
    let sol = |y: &str| BTreeMap::from([("y".to_string(), term(&kb, &format!("y x = {y}")))]);
    let solved = solved(&kb, "biegelinie");
    let result = solved.tree().unwrap().root.result.clone().unwrap();
    let got = BTreeMap::from([("y".to_string(), term(&kb, &result))]);
    assert_eq!(check_postcondition(&kb, &inst, &got, &[]).unwrap().truth, Truth::True);
    assert_eq!(check_postcondition(&kb, &inst, &sol(ORACLE_Y), &[]).unwrap().truth, Truth::True);
    let dropped = "q_0 / (24 * EI) * (6 * L ^ 2 * x ^ 2 + x ^ 4)";
    assert_eq!(check_postcondition(&kb, &inst, &sol(dropped), &[]).unwrap().truth, Truth::False);
}

fn chain_rule() {
    let kb = kb();
    let rs = kb.rule_set("differentiate").unwrap();
    let inst = Inst::from([("bdv".to_string(), Term::var("x"))]);
    let start = term(&kb, "d/dx (x + sin(x ^ 2))");
    let split = rewrite_at(&rs, &start, &[], "diff_sum", &inst).unwrap();
    assert_eq!(split, term(&kb, "d/dx x + d/dx sin(x ^ 2)"));
    let chained = rewrite_at(&rs, &split, &[2], "diff_sin", &inst).unwrap();
    assert_eq!(chained, term(&kb, "d/dx x + cos(x ^ 2) * d/dx x ^ 2"));
    let full = normalize(&rs, &start, &inst).unwrap();
    assert_eq!(norm(&kb, &full), norm(&kb, &term(&kb, "1 + cos(x ^ 2) * 2 * x")));
    assert_eq!(equivalent(&full, &term(&kb, "1 + 2 * x * cos(x ^ 2)")), Some(true));
}

fn deepest(kb: &KnowledgeBase, inst: &ProblemInstance, root: &[String]) -> Vec<Vec<String>> {
    let prover = kb.prover().with_facts(&inst.assumptions);
    let none = Inst::new();
    let holds = |k: &[String]| {
        let node = kb.problem_by_key(k).unwrap();
        let Some(s) = match_pattern(&node.model, &inst.formalisation) else { return false };
        node.model.where_.iter().all(|w| eval_pred(&prover, &instantiate(w, &s, &none), &none) == Truth::True)
    };
    let mut found = Vec::new();
    let mut stack = vec![(root.to_vec(), 0usize)];
    while let Some((k, d)) = stack.pop() {
        if holds(&k) {
            found.push((d, k.clone()));
            stack.extend(kb.problem_by_key(&k).unwrap().children.iter().map(|c| (c.clone(), d + 1)));
        }
    }
    let max = found.iter().map(|(d, _)| *d).max().unwrap_or(0);
    found.into_iter().filter(|(d, _)| *d == max).map(|(_, k)| k).collect()
}

fn refinement() {
    let kb = kb();
    let root = vec!["equation".to_string()];
    let ids = ["eq_linear", "eq_linear_both", "eq_quadratic", "eq_quadratic_like", "eq_cubic", "eq_root", "eq_root_sum", "eq_rational", "eq_rational_root", "eq_transcendental", "eq_trivial"];
    for id in ids {
        let inst = instance(&kb, id);
        let r = refine(&kb, &inst, &root).unwrap();
        let mut oracle = deepest(&kb, &inst, &root);
        assert!(oracle.contains(&r.key), "{id}: {:?} not among {oracle:?}", r.key);
        if oracle.len() > 1 {
            oracle.sort_by_key(|k| {
                let parent = kb.problem_by_key(&k[..k.len() - 1]).unwrap();
                parent.children.iter().position(|c| c == k).unwrap()
            });
            assert_eq!(r.key, oracle[0], "{id}: leftmost");
        }
        for _ in 0..3 {
            assert_eq!(refine(&kb, &inst, &root).unwrap(), r);
        }
    }
}

fn walk(kb: &KnowledgeBase, name: &str) -> Vec<(InterpState, Option<Term>)> {
    let mut st = session(kb, name).state.unwrap();
    let mut out = Vec::new();
    while !st.done {
        let before = st.clone();
        let p = st.next_step(kb).unwrap();
        out.push((before, p.term));
    }
    out
}

fn mutate(t: &Term, rng: &mut StdRng) -> Option<Term> {
    let ps = t.positions();
    let path = &ps[rng.gen_range(0..ps.len())];
    let vars: Vec<String> = t.free_vars().into_iter().collect();
    let new = match t.subterm_at(path).ok()? {
        Term::Num { value, .. } => {
            let v: i64 = num::ToPrimitive::to_i64(value)?;
            Term::int([v + 1, v - 1, 2 * v + 3, -v][rng.gen_range(0..4)])
        }
        Term::Var { .. } if path.last() == Some(&0) => return None,
        Term::Var { name, .. } => {
            let other = &vars[rng.gen_range(0..vars.len())];
            Term::var(if other == name { "z" } else { other })
        }
        Term::Const { name, .. } if path.last() == Some(&0) && ["+", "-", "*", "/", "^"].contains(&name.as_str()) => {
            Term::constant(["+", "-", "*", "/", "^"][rng.gen_range(0..5)])
        }
        _ => return None,
    };
    let m = t.replace_at(path, new).ok()?;
    (m != *t).then_some(m)
}

fn input_checking() {
    let kb = kb();
    let mut rng = StdRng::seed_from_u64(99);
    for name in GOLDEN {
        let steps = walk(&kb, name);
        for k in 0..steps.len() {
            for j in 1..=2 {
                let Some((_, Some(t))) = steps.get(k + j - 1) else { continue };
                let mut st = steps[k].0.clone();
                let out = check_input_term(&mut st, &kb, t).unwrap();
                assert!(out.is_accepted(), "{name} k={k} j={j}: {out:?}");
                assert_eq!(check_tree(&kb, &st.tree), Ok(()), "{name} k={k} j={j}");
            }
        }
        let (mut tested, mut tries) = (0, 0);
        while tested < 100 {
            tries += 1;
            assert!(tries < 100_000, "{name}: too few mutants");
            let k = rng.gen_range(0..steps.len());
            let (st, Some(t)) = &steps[k] else { continue };
            let Some(m) = mutate(t, &mut rng) else { continue };
            let mut window: Vec<Term> = st.current_term().cloned().into_iter().collect();
            window.extend(steps[k..].iter().take(DEFAULT_LOOKAHEAD).filter_map(|(_, t)| t.clone()));
            if window.iter().any(|w| equivalent(w, &m) != Some(false)) {
                continue;
            }
            let out = check_input_term(&mut st.clone(), &kb, &m).unwrap();
            assert!(!out.is_accepted(), "{name}: {} accepted", render(&m, &kb.signature));
            tested += 1;
        }
    }
    let mut st = session(&kb, "expand_square").state.unwrap();
    st.next_step(&kb).unwrap();
    let out = check_input_term(&mut st, &kb, &term(&kb, "a ^ 2 + b ^ 2")).unwrap();
    let InputOutcome::Rejected { hint: Some(h), .. } = out else { panic!("{out:?}") };
    assert_eq!(h.id, "square_of_sum");
}

fn random_poly(rng: &mut StdRng, depth: u32) -> Term {
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.5) { Term::int(rng.gen_range(-6..7)) } else { Term::var(["a", "b", "x"][rng.gen_range(0..3)]) };
    }
    match rng.gen_range(0..4) {
        0 => Term::binop("+", random_poly(rng, depth - 1), random_poly(rng, depth - 1)),
        1 => Term::binop("*", random_poly(rng, depth - 1), random_poly(rng, depth - 1)),
        2 => Term::binop("-", random_poly(rng, depth - 1), random_poly(rng, depth - 1)),
        _ => Term::binop("^", random_poly(rng, depth - 1), Term::int(rng.gen_range(0..4))),
    }
}

fn replay_soundness() {
    let dir = tempfile::tempdir().unwrap();
    for name in GOLDEN {
        let o = lucas(&["solve", name]);
        assert_eq!(o.status.code(), Some(0), "solve {name}");
        let f = dir.path().join(format!("{name}.json"));
        std::fs::write(&f, &o.stdout).unwrap();
        let golden = std::fs::read_to_string(root().join(format!("crates/core/tests/golden/{name}.calc.json"))).unwrap();
        assert_eq!(CalcTree::from_json(&golden).unwrap(), CalcTree::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap(), "{name} drifted");
        assert_eq!(lucas(&["check", f.to_str().unwrap()]).status.code(), Some(0), "check {name}");
    }
    let kb = kb();
    let rs = kb.rule_set("make_polynomial").unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..1000 {
        let t = random_poly(&mut rng, 4);
        let (result, trace) = normalize_steps(&rs, &t, &Inst::new()).unwrap();
        assert_eq!(replay(&rs, &t, &trace, &Inst::new()).unwrap(), result, "{}", render(&t, &kb.signature));
    }
}

fn learning_path() {
    let kb = kb();
    let o = lucas(&["prereq", "Biegelinien"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let order: Vec<String> = v["order"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect();
    let at = |k: &str| order.iter().position(|x| x == k).unwrap_or_else(|| panic!("{k} missing"));
    let root = at("problem:Baustatik,Biegelinien");
    assert_eq!(root, order.len() - 1);
    for k in ["ruleset:integration", "method:Biegelinien,ausBelastung", "method:LinearSystem,solveSystem"] {
        assert!(at(k) < root, "{k}");
    }
    for (i, item) in order.iter().enumerate() {
        let (kind, id) = item.split_once(':').unwrap();
        let key: Vec<String> = id.split(',').map(String::from).collect();
        let mut needs: Vec<String> = Vec::new();
        match kind {
            "problem" => needs.extend(kb.problem_by_key(&key).unwrap().methods.iter().map(|m| format!("method:{}", m.join(",")))),
            "method" => {
                let m = kb.method(&key).unwrap();
                needs.extend(m.check.iter().map(|c| format!("ruleset:{c}")));
                for t in m.program.body.tactics() {
                    match t {
                        Tactic::RewriteSet { set, .. } => needs.push(format!("ruleset:{set}")),
                        Tactic::SubProblem { problem, method, .. } => {
                            needs.push(format!("problem:{}", problem.join(",")));
                            needs.push(format!("method:{}", method.join(",")));
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        }
        for n in needs {
            assert!(at(&n) < i, "{n} must precede {item}");
        }
    }
}

fn app(store: &Path) -> Router {
    let cfg = Config { kb: root().join("kb"), store: store.to_path_buf(), instances: root().join("instances"), port: 0 };
    router(Arc::new(AppState::open(&cfg).unwrap()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn open_session(app: &Router, instance: &str, mode: &str) -> String {
    let (_, v) = call(app, "POST", "/sessions", Some(json!({ "instance_id": instance, "mode": mode, "skip_specification": true }))).await;
    v["session_id"].as_str().unwrap().to_string()
}

async fn dialogue_async() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = open_session(&app, "biegelinie", "exercise").await;
    let mut kinds = Vec::new();
    for _ in 0..4 {
        let (_, v) = call(&app, "POST", &format!("/sessions/{id}/next"), None).await;
        kinds.push(v["kind"].as_str().unwrap_or("?").to_string());
    }
    assert_eq!(kinds, ["step", "step", "step", "counter_request"]);

    let mut rng = StdRng::seed_from_u64(11);
    let instances = ["biegelinie", "diff_chain", "expand_square"];
    let junk = ["x = 1", "a ^ 2 + b ^ 2", "y x = 0", "2 * a * b + a ^ 2 + b ^ 2", "1 + 2 * x * cos(x ^ 2)"];
    let mut id = open_session(&app, instances[0], "explore").await;
    for n in 0..200 {
        let (status, v) = match rng.gen_range(0..10) {
            0 => call(&app, "POST", &format!("/sessions/{id}/auto"), None).await,
            1..=3 => call(&app, "POST", &format!("/sessions/{id}/step"), Some(json!({ "term": junk[rng.gen_range(0..junk.len())] }))).await,
            _ => call(&app, "POST", &format!("/sessions/{id}/next"), None).await,
        };
        assert!(v["kind"] != "deny" && v["kind"] != "counter_request", "request {n}: {v}");
        if status == StatusCode::CONFLICT || v["phase"] == "done" {
            id = open_session(&app, instances[rng.gen_range(0..3)], "explore").await;
        } else {
            assert!(status.is_success() || status == StatusCode::UNPROCESSABLE_ENTITY, "request {n}: {status} {v}");
        }
    }
}

fn script() -> Vec<(&'static str, String, Option<Value>)> {
    let s = "/sessions/s1";
    let mut out = vec![("POST", "/sessions".to_string(), Some(json!({ "instance_id": "biegelinie", "mode": "exercise", "skip_specification": true })))];
    for _ in 0..3 {
        out.push(("POST", format!("{s}/next"), None));
    }
    out.push(("POST", format!("{s}/step"), Some(json!({ "term": "y x = 1" }))));
    for _ in 0..4 {
        out.push(("POST", format!("{s}/next"), None));
    }
    out.push(("POST", format!("{s}/auto"), None));
    out
}

async fn crash_safety_async() {
    let calls = script();
    let run = |app: Router, calls: Vec<(&'static str, String, Option<Value>)>| async move {
        let mut out = Vec::new();
        for (m, u, b) in calls {
            out.push(call(&app, m, &u, b).await);
        }
        out
    };
    let dir = tempfile::tempdir().unwrap();
    let whole = app(dir.path());
    let replies = run(whole.clone(), calls.clone()).await;
    let (_, reference) = call(&whole, "GET", "/sessions/s1/tree", None).await;
    let reference = serde_json::to_string(&reference).unwrap();
    for k in 0..=calls.len() {
        let dir = tempfile::tempdir().unwrap();
        let mut split = run(app(dir.path()), calls[..k].to_vec()).await;
        let second = app(dir.path());
        split.extend(run(second.clone(), calls[k..].to_vec()).await);
        assert_eq!(split, replies, "restart after call {k}");
        let (_, tree) = call(&second, "GET", "/sessions/s1/tree", None).await;
        assert_eq!(serde_json::to_string(&tree).unwrap(), reference, "restart after call {k}");
    }
}

fn block_on<F: std::future::Future>(f: F) -> F::Output {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap().block_on(f)
}

fn dialogue() {
    block_on(dialogue_async())
}

fn crash_safety() {
    block_on(crash_safety_async())
}

fn main() {
    let criteria: [(&str, fn()); 9] = [
        ("golden beam calculation", golden_beam),
        ("post-condition check", postcondition),
        ("chain rule", chain_rule),
        ("refinement suite", refinement),
        ("input checking", input_checking),
        ("replay soundness", replay_soundness),
        ("learning path", learning_path),
        ("dialogue policy", dialogue),
        ("crash safety", crash_safety),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        match catch_unwind(AssertUnwindSafe(f)) {
            Ok(()) => println!("PASS  {name} ({:.2} s)", t.elapsed().as_secs_f64()),
            Err(e) => {
                failed += 1;
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
                println!("FAIL  {name}: {}", msg.lines().next().unwrap_or(""));
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
