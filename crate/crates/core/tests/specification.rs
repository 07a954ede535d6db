use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lucas_core::knowledge::KnowledgeBase;
use lucas_core::program::Key;
use lucas_core::rewrite::{eval_pred, instantiate, Inst, Truth};
use lucas_core::specification::*;
use lucas_core::terms::{parse, Term};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn kb() -> KnowledgeBase {
    KnowledgeBase::load(&root().join("kb")).unwrap()
}

fn instance(kb: &KnowledgeBase, id: &str) -> ProblemInstance {
    ProblemInstance::load(&root().join("instances").join(format!("{id}.json")), &kb.signature).unwrap()
}

fn t(kb: &KnowledgeBase, s: &str) -> Term {
    parse(s, &kb.signature).unwrap().stripped()
}

fn key(parts: &[&str]) -> Key {
    parts.iter().map(|s| s.to_string()).collect()
}

/// Every node is tested on its own, with its full inherited pattern.
fn brute_force_deepest(kb: &KnowledgeBase, inst: &ProblemInstance, root: &[String]) -> Vec<Key> {
    let prover = kb.prover().with_facts(&inst.assumptions);
    let none = Inst::new();
    let holds = |k: &Key| {
        let node = kb.problem_by_key(k).unwrap();
        let Some(s) = match_pattern(&node.model, &inst.formalisation) else { return false };
        node.model
            .where_
            .iter()
            .all(|w| eval_pred(&prover, &instantiate(w, &s, &none), &none) == Truth::True)
    };
    let mut all = Vec::new();
    let mut stack = vec![(root.to_vec(), 0usize)];
    while let Some((k, depth)) = stack.pop() {
        if !holds(&k) {
            continue;
        }
        all.push((depth, k.clone()));
        for c in &kb.problem_by_key(&k).unwrap().children {
            stack.push((c.clone(), depth + 1));
        }
    }
    let max = all.iter().map(|(d, _)| *d).max().unwrap_or(0);
    all.into_iter().filter(|(d, _)| *d == max).map(|(_, k)| k).collect()
}

#[test]
fn refinement_suite() {
    let kb = kb();
    let cases = [
        ("eq_linear", vec!["equation", "univariate", "linear"]),
        ("eq_linear_both", vec!["equation", "univariate", "linear"]),
        ("eq_quadratic", vec!["equation", "univariate", "quadratic"]),
        ("eq_quadratic_like", vec!["equation", "univariate", "quadratic"]),
        ("eq_cubic", vec!["equation", "univariate", "cubic"]),
        ("eq_root", vec!["equation", "univariate", "root"]),
        ("eq_root_sum", vec!["equation", "univariate", "root"]),
        ("eq_rational", vec!["equation", "univariate", "rational"]),
        ("eq_transcendental", vec!["equation", "univariate"]),
        ("eq_trivial", vec!["equation"]),
    ];
    let eq_root = key(&["equation"]);
    for (id, expected) in cases {
        let inst = instance(&kb, id);
        let r = refine(&kb, &inst, &eq_root).unwrap();
        assert_eq!(r.key, key(&expected), "{id}");
        let oracle = brute_force_deepest(&kb, &inst, &eq_root);
        assert_eq!(oracle, vec![r.key.clone()], "{id}: unique deepest match");
        for _ in 0..3 {
            assert_eq!(refine(&kb, &inst, &eq_root).unwrap(), r, "{id}: deterministic");
        }
    }
}

#[test]
fn refinement_tie_break_is_leftmost() {
    let kb = kb();
    let inst = instance(&kb, "eq_rational_root");
    let eq_root = key(&["equation"]);
    let mut deepest = brute_force_deepest(&kb, &inst, &eq_root);
    deepest.sort();
    assert_eq!(deepest, vec![key(&["equation", "univariate", "rational"]), key(&["equation", "univariate", "root"])]);
    assert_eq!(refine(&kb, &inst, &eq_root).unwrap().key, key(&["equation", "univariate", "root"]));
}

#[test]
fn refinement_is_sound() {
    let kb = kb();
    let prover = kb.prover();
    for id in ["eq_linear", "eq_root", "eq_cubic", "eq_rational"] {
        let inst = instance(&kb, id);
        let r = refine(&kb, &inst, &key(&["equation"])).unwrap();
        let node = kb.problem_by_key(&r.key).unwrap();
        assert!(eval_where(&prover, &node.model.where_, &r.bindings).is_ok(), "{id}");
    }
}

#[test]
fn refine_biegelinie_and_no_match() {
    let kb = kb();
    let inst = instance(&kb, "biegelinie");
    let r = refine(&kb, &inst, &key(&["Baustatik"])).unwrap();
    assert_eq!(r.key, key(&["Baustatik", "Biegelinien"]));
    assert_eq!(r.bindings["l_l"], t(&kb, "L"));
    let eq = instance(&kb, "eq_linear");
    assert_eq!(refine(&kb, &eq, &key(&["Baustatik"])), Err(SpecError::NoMatch(key(&["Baustatik"]))));
}

#[test]
fn model_feedback() {
    let kb = kb();
    let inst = instance(&kb, "biegelinie");
    let rs = kb.rule_set("norm_model").unwrap();
    let pattern = &kb.problem("Biegelinien").unwrap().model;
    let mut user = Model::default();
    user.given = vec![t(&kb, "Traegerlaenge L"), t(&kb, "Streckenlast q_0")];
    let fb = match_model(pattern, &user, &inst.formalisation, &rs, &kb.signature);
    assert!(!fb.complete);
    let given: Vec<Verdict> = fb.items.iter().filter(|i| i.index.is_some()).map(|i| i.verdict).collect();
    assert_eq!(given, [Verdict::Correct, Verdict::Correct]);
    let missing: Vec<&str> =
        fb.items.iter().filter(|i| i.verdict == Verdict::Missing).map(|i| i.item.as_str()).collect();
    assert_eq!(missing, ["FunktionsVariable", "", "Biegelinie", "Randbedingungen"]);

    user.given.push(t(&kb, "Traegerlaenge (2 * L)"));
    user.given.push(t(&kb, "Unbekannte [c]"));
    let fb = match_model(pattern, &user, &inst.formalisation, &rs, &kb.signature);
    assert_eq!(fb.items[2].verdict, Verdict::Superfluous);
    assert_eq!(fb.items[3].verdict, Verdict::Superfluous);

    let mut wrong = Model::default();
    wrong.given = vec![t(&kb, "Traegerlaenge (2 * L)")];
    let fb = match_model(pattern, &wrong, &inst.formalisation, &rs, &kb.signature);
    assert_eq!(fb.items[0].verdict, Verdict::Incorrect);

    let fb = match_model(pattern, &Model::default(), &inst.formalisation, &rs, &kb.signature);
    assert!(fb.items.iter().all(|i| i.verdict == Verdict::Missing));
    assert_eq!(fb.items.len(), 6);
    assert!(!fb.complete);

    let fb = match_model(pattern, &inst.formalisation, &inst.formalisation, &rs, &kb.signature);
    assert!(fb.complete);
}

#[test]
fn model_feedback_stable_under_normalization() {
    let kb = kb();
    let rs = kb.rule_set("norm_model").unwrap();
    let pattern = &kb.problem("Biegelinien").unwrap().model;
    let mut formal = Model::default();
    formal.given = vec![t(&kb, "Traegerlaenge 4")];
    for shown in ["Traegerlaenge 4", "Traegerlaenge (2 + 2)", "Traegerlaenge (8 / 2)"] {
        let mut user = Model::default();
        user.given = vec![t(&kb, shown)];
        let fb = match_model(pattern, &user, &formal, &rs, &kb.signature);
        assert_eq!(fb.items[0].verdict, Verdict::Correct, "{shown}");
    }
}

#[test]
fn guard_and_formal_args() {
    let kb = kb();
    let m = key(&["Integrieren", "KonstanteBestimmen"]);
    let inst = instance(&kb, "biegelinie");
    let env = |l: &str| -> BTreeMap<String, Term> {
        [("l", l), ("q", "q_0"), ("v", "x")].iter().map(|(k, v)| (k.to_string(), t(&kb, v))).collect()
    };
    assert_eq!(check_guard(&kb, &m, &env("L"), &inst.assumptions).unwrap().truth, Truth::True);
    let neg = check_guard(&kb, &m, &env("-1"), &inst.assumptions).unwrap();
    assert_eq!(neg.truth, Truth::False);
    assert!(neg.failing.is_some());
    assert_eq!(check_guard(&kb, &m, &env("L"), &[]).unwrap().truth, Truth::Unknown);
    let mut partial = env("L");
    partial.remove("q");
    assert_eq!(check_guard(&kb, &m, &partial, &[]), Err(SpecError::MissingArgument("q".into())));

    let fa = formal_args(&kb, &key(&["Biegelinien", "ausBelastung"])).unwrap();
    let names: Vec<(&str, &str)> = fa.iter().map(|a| (a.name.as_str(), a.descriptor.as_str())).collect();
    assert_eq!(names, [("q", "Streckenlast"), ("v", "FunktionsVariable")]);
    assert_eq!(formal_args(&kb, &m).unwrap().len(), 5);
    assert!(matches!(formal_args(&kb, &key(&["no", "such"])), Err(SpecError::NotFound { .. })));
}

#[test]
fn biegelinie_subproblem_graph() {
    let kb = kb();
    let inst = instance(&kb, "biegelinie");
    let prog = kb.programs["biegelinie"].clone();
    let mut g = SubProblemGraph::from_program(&kb, &prog).unwrap();
    let mut root_ports = ports(&kb, &inst.formalisation.given);
    root_ports.extend(ports(&kb, &inst.formalisation.relate));
    let keys: Vec<Key> = g.nodes.iter().map(|n| n.key.clone()).collect();
    assert_eq!(
        keys,
        [key(&["vonBelastungZu", "Biegelinien"]), key(&["setzeRandbedingungen", "Biegelinien"]), key(&["LINEAR", "system"])]
    );
    assert_eq!(validate_graph(&g, &root_ports), Ok(vec![0, 1, 2]));
    g.swap(0, 1);
    let v = validate_graph(&g, &root_ports).unwrap_err();
    assert!(v.iter().any(|x| matches!(x, Violation::UnfedInput { item, .. } if item == "Funktionen")), "{v:?}");
    g.swap(0, 1);
    assert!(validate_graph(&g, &root_ports).is_ok());

    let mut bad = g.clone();
    bad.edges[0].input = "Randbedingungen".into();
    bad.nodes[1].inputs[1].ty = lucas_core::terms::Type::real();
    assert!(validate_graph(&bad, &root_ports).is_err());
}

#[test]
fn graph_cycle_and_type_mismatch() {
    let kb = kb();
    let a = GraphNode::from_problem(&kb, &key(&["vonBelastungZu", "Biegelinien"])).unwrap();
    let b = GraphNode::from_problem(&kb, &key(&["setzeRandbedingungen", "Biegelinien"])).unwrap();
    let g = SubProblemGraph {
        nodes: vec![a.clone(), b.clone()],
        edges: vec![
            Edge { from: 0, output: "Funktionen".into(), to: 1, input: "Funktionen".into() },
            Edge { from: 1, output: "Gleichungen".into(), to: 0, input: "Streckenlast".into() },
        ],
        supplied: vec![],
    };
    let v = validate_graph(&g, &[]).unwrap_err();
    assert!(v.iter().any(|x| matches!(x, Violation::Cycle { .. })));
    assert!(v.iter().any(|x| matches!(x, Violation::TypeMismatch { .. })));

    let single = SubProblemGraph::connect(vec![a]);
    let inst = instance(&kb, "biegelinie");
    assert_eq!(validate_graph(&single, &ports(&kb, &inst.formalisation.given)), Ok(vec![0]));
}

fn solution(kb: &KnowledgeBase, y: &str) -> BTreeMap<String, Term> {
    BTreeMap::from([("y".to_string(), t(kb, &format!("y x = {y}")))])
}

const ORACLE_Y: &str = "q_0 / (24 * EI) * (6 * L ^ 2 * x ^ 2 - 4 * L * x ^ 3 + x ^ 4)";

#[test]
fn postcondition_true_for_oracle_solution() {
    let kb = kb();
    let inst = instance(&kb, "biegelinie");
    let pc = check_postcondition(&kb, &inst, &solution(&kb, ORACLE_Y), &[]).unwrap();
    assert_eq!(pc.truth, Truth::True, "{pc:?}");
}

#[test]
fn postcondition_false_when_a_term_is_dropped() {
    let kb = kb();
    let inst = instance(&kb, "biegelinie");
    let dropped = "q_0 / (24 * EI) * (6 * L ^ 2 * x ^ 2 + x ^ 4)";
    let pc = check_postcondition(&kb, &inst, &solution(&kb, dropped), &[]).unwrap();
    assert_eq!(pc.truth, Truth::False);
    assert!(!pc.failed.is_empty());
    let sign = "q_0 / (24 * EI) * (6 * L ^ 2 * x ^ 2 + 4 * L * x ^ 3 + x ^ 4)";
    assert_eq!(check_postcondition(&kb, &inst, &solution(&kb, sign), &[]).unwrap().truth, Truth::False);
}

#[test]
fn postcondition_edge_cases() {
    let kb = kb();
    let mut inst = instance(&kb, "biegelinie");
    assert!(matches!(check_postcondition(&kb, &inst, &BTreeMap::new(), &[]), Err(SpecError::MissingArgument(_))));
    inst.formalisation.relate.clear();
    let pc = check_postcondition(&kb, &inst, &solution(&kb, "0"), &[]).unwrap();
    assert_eq!(pc.truth, Truth::True);
}

#[test]
fn dropping_a_where_clause_keeps_matches() {
    let kb = kb();
    let ids = ["eq_linear", "eq_linear_both", "eq_quadratic", "eq_quadratic_like", "eq_cubic", "eq_root", "eq_root_sum", "eq_rational", "eq_rational_root", "eq_transcendental", "eq_trivial"];
    let mut checked = 0;
    for id in ids {
        let inst = instance(&kb, id);
        let prover = kb.prover().with_facts(&inst.assumptions);
        for node in kb.problems.values() {
            if problem_matches(node, &inst.formalisation, &prover).is_none() {
                continue;
            }
            for i in 0..node.model.where_.len() {
                let mut general = node.clone();
                general.model.where_.remove(i);
                assert!(problem_matches(&general, &inst.formalisation, &prover).is_some(), "{id} {:?} without clause {i}", node.key);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}
