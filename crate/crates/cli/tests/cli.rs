#[path = "../../core/tests/common/beam.rs"]
#[allow(dead_code, unused_imports)]
mod beam;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use beam::{deflection, eval, exact, q, Q};
use lucas_core::knowledge::KnowledgeBase;
use lucas_core::terms::parse;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn lucas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lucas"))
        .current_dir(root())
        .env_remove("LUCAS_KB")
        .env_remove("LUCAS_INSTANCES")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn solve_matches_the_beam_oracle() {
    let o = lucas(&["solve", "instances/biegelinie.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let tree = stdout_json(&o);
    let kb = KnowledgeBase::load(&root().join("kb")).unwrap();
    let result = parse(tree["root"]["result"].as_str().unwrap(), &kb.signature).unwrap().stripped();
    let (_, rhs) = result.as_equation().unwrap();
    for (l, q0, ei) in [(3, 2, Q::new(5.into(), 2.into())), (7, -4, q(11)), (1, 1, q(1))] {
        let (l, q0) = (q(l), q(q0));
        let y = deflection(&l, &q0, &ei);
        for xi in 0..5 {
            let x = Q::new(xi.into(), 2.into());
            let env = BTreeMap::from([("L".into(), l.clone()), ("q_0".into(), q0.clone()), ("EI".into(), ei.clone()), ("x".into(), x.clone())]);
            assert_eq!(exact(rhs, &env).unwrap(), eval(&y, &x));
        }
    }
}

#[test]
fn solved_output_checks() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["biegelinie", "diff_chain", "expand_square"] {
        let o = lucas(&["solve", name]);
        assert_eq!(o.status.code(), Some(0), "{name}");
        let f = dir.path().join(format!("{name}.json"));
        std::fs::write(&f, &o.stdout).unwrap();
        let c = lucas(&["check", f.to_str().unwrap()]);
        assert_eq!(c.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&c.stdout));
        assert_eq!(stdout_json(&c)["ok"], true);
    }
}

#[test]
fn check_reports_the_mutated_line() {
    let golden = std::fs::read_to_string(root().join("crates/core/tests/golden/diff_chain.calc.json")).unwrap();
    let bad = golden.replacen("\"term\": \"d/dx x + d/dx sin(x ^ 2)\"", "\"term\": \"d/dx x + d/dx cos(x ^ 2)\"", 1);
    assert_ne!(bad, golden);
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, bad).unwrap();
    let o = lucas(&["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = stdout_json(&o);
    assert_eq!(v["ok"], false);
    assert_eq!(v["divergence"]["id"], "r.2");
    assert!(!o.stderr.is_empty());
}

#[test]
fn trace_lines_follow_the_tree() {
    let o = lucas(&["solve", "expand_square", "--trace"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let tree: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert!(tree["root"].is_object());
    let rest: Vec<Value> = lines.map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!rest.is_empty());
    for r in &rest {
        for k in ["rule", "path", "before", "after"] {
            assert!(!r[k].is_null(), "{r}");
        }
    }
}

#[test]
fn prereq_lists_sub_problems_before_the_root() {
    let o = lucas(&["prereq", "Biegelinien"]);
    assert_eq!(o.status.code(), Some(0));
    let order: Vec<String> = stdout_json(&o)["order"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect();
    let at = |k: &str| order.iter().position(|x| x == k).unwrap_or_else(|| panic!("{k} missing from {order:?}"));
    let root = at("problem:Baustatik,Biegelinien");
    for k in ["problem:vonBelastungZu,Biegelinien", "problem:setzeRandbedingungen,Biegelinien", "problem:LINEAR,system"] {
        assert!(at(k) < root);
    }
}

#[test]
fn refine_descends_the_equation_tree() {
    let o = lucas(&["refine", "eq_linear", "--root", "equation,univariate"]);
    let v = stdout_json(&o);
    assert_eq!(o.status.code(), Some(0), "{v}");
    assert!(v["key"].as_array().unwrap().iter().any(|p| p == "linear"), "{v}");
}

#[test]
fn usage_and_kb_errors_exit_2() {
    assert_eq!(lucas(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lucas(&["prereq", "NoSuchProblem"]).status.code(), Some(2));
    assert_eq!(lucas(&["--kb", "/nonexistent", "prereq", "Biegelinien"]).status.code(), Some(2));
    assert_eq!(lucas(&["solve", "eq_linear"]).status.code(), Some(2));
}

#[test]
fn lint_flags_a_broken_kb() {
    let ok = lucas(&["lint", "kb"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    assert_eq!(stdout_json(&ok), Value::Array(vec![]));

    let dir = tempfile::tempdir().unwrap();
    copy_dir(&root().join("kb"), dir.path());
    let f = dir.path().join("Diff/theory.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    v["theorems"]["bogus_rule"] = serde_json::json!({ "rule": "d/dbdv u = zz_unbound + 1", "explanation": "" });
    std::fs::write(&f, v.to_string()).unwrap();
    let bad = lucas(&["lint", dir.path().to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1), "{}", String::from_utf8_lossy(&bad.stderr));
    let issues = stdout_json(&bad);
    assert!(issues.as_array().unwrap().iter().any(|i| i["message"].as_str().unwrap().contains("bogus_rule")), "{issues}");
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        let dest = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_dir(&p, &dest);
        } else {
            std::fs::copy(&p, &dest).unwrap();
        }
    }
}

fn http(addr: &str, method: &str, path: &str, body: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(s, "{method} {path} HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len()).unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    out
}

#[test]
fn serve_answers_over_tcp() {
    let store = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_lucas"))
        .current_dir(root())
        .args(["serve", "--port", "0", "--store", store.path().to_str().unwrap()])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("{line}")).to_string();
    let created = http(&addr, "POST", "/sessions", r#"{"instance_id":"expand_square","skip_specification":true}"#);
    assert!(created.starts_with("HTTP/1.1 200"), "{created}");
    assert!(created.contains("\"session_id\":\"s1\""), "{created}");
    let next = http(&addr, "POST", "/sessions/s1/next", "");
    assert!(next.contains("\"kind\":\"step\""), "{next}");
    assert!(http(&addr, "GET", "/sessions/s7", "").starts_with("HTTP/1.1 404"));
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(store.path().join("s1.json").exists());
}
