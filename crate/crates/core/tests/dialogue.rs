mod common;

use lucas_core::dialogue::*;
use lucas_core::interpreter::Phase;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn key(s: &str) -> Vec<String> {
    s.split(',').map(String::from).collect()
}

fn req(kind: RequestKind, problem: &str, is_root: bool) -> Request {
    Request { kind, problem: key(problem), phase: Phase::Solve, is_root }
}

fn shipped() -> DialogRules {
    DialogRules::load(&common::root().join("kb/dialog_rules.json")).unwrap()
}

#[test]
fn shipped_rules_equal_the_defaults() {
    assert_eq!(shipped(), DialogRules::default());
}

#[test]
fn fourth_help_request_in_exercise_mode_is_countered() {
    let rules = shipped();
    let mut um = UserModel::new(Mode::Exercise);
    let r = req(RequestKind::NextStep, "Baustatik,Biegelinien", true);
    let mut actions = Vec::new();
    for _ in 0..4 {
        let (_, a) = rules.decide(&um, &r);
        if a == Action::Grant {
            um.update(&UserEvent::HelpRequested { problem: r.problem.clone() });
        }
        actions.push(a);
    }
    assert_eq!(&actions[..3], &[Action::Grant, Action::Grant, Action::Grant]);
    assert_eq!(actions[3], Action::CounterRequest { demand: Demand::InputTerm });
}

#[test]
fn help_on_another_problem_starts_a_new_series() {
    let rules = shipped();
    let mut um = UserModel::new(Mode::Exercise);
    for _ in 0..3 {
        um.update(&UserEvent::HelpRequested { problem: key("a") });
    }
    assert_eq!(rules.decide(&um, &req(RequestKind::NextStep, "b", true)).1, Action::Grant);
    um.update(&UserEvent::HelpRequested { problem: key("b") });
    assert_eq!(um.consecutive_help, 1);
}

#[test]
fn update_bookkeeping() {
    let mut um = UserModel::new(Mode::Exercise);
    let p = key("Biegelinien");
    um.update(&UserEvent::HelpRequested { problem: p.clone() });
    um.update(&UserEvent::HelpRequested { problem: p.clone() });
    assert_eq!(um.consecutive_help, 2);
    um.update(&UserEvent::StepAccepted { problem: p.clone(), rule_sets: vec!["integration".into()] });
    assert_eq!(um.consecutive_help, 0);
    um.update(&UserEvent::StepRejected { problem: p.clone() });
    um.update(&UserEvent::HelpRequested { problem: p.clone() });
    um.update(&UserEvent::ProblemCompleted { problem: p.clone() });
    let c = &um.problems["Biegelinien"];
    assert_eq!((c.attempts, c.completions, c.next_step_requests, c.rejected_inputs), (2, 1, 3, 1));
    assert_eq!(um.consecutive_help, 0);
    assert_eq!(um.rule_sets["integration"], 1);
}

#[test]
fn black_boxed_subproblems_run_silently_but_never_the_root() {
    let kb = common::kb();
    let rules = shipped();
    let mut um = UserModel::new(Mode::Explore);
    assert!(um.black_box(&kb, "vonBelastungZu,Biegelinien"));
    assert!(!um.black_box(&kb, "no,such,problem"));
    assert_eq!(rules.decide(&um, &req(RequestKind::NextStep, "vonBelastungZu,Biegelinien", false)).1, Action::AutoBlackbox);
    assert_eq!(rules.decide(&um, &req(RequestKind::NextStep, "vonBelastungZu,Biegelinien", true)).1, Action::Grant);
}

#[test]
fn rule_chains_always_end_in_a_grant() {
    let rules = DialogRules::new(vec![DialogRule {
        id: "strict".into(),
        when: When { mode: Some(Mode::Exam), ..When::default() },
        action: Action::Deny { message: "no help during exams".into() },
    }]);
    assert_eq!(rules.rules().len(), 2);
    let um = UserModel::new(Mode::Exercise);
    assert_eq!(rules.decide(&um, &req(RequestKind::NextStep, "x", true)).1, Action::Grant);
    let exam = UserModel::new(Mode::Exam);
    assert!(matches!(rules.decide(&exam, &req(RequestKind::NextStep, "x", true)).1, Action::Deny { .. }));
}

fn random_event(rng: &mut StdRng, keys: &[&str]) -> UserEvent {
    let problem = key(keys[rng.gen_range(0..keys.len())]);
    match rng.gen_range(0..4) {
        0 => UserEvent::StepAccepted { problem, rule_sets: Vec::new() },
        1 => UserEvent::StepRejected { problem },
        2 => UserEvent::HelpRequested { problem },
        _ => UserEvent::ProblemCompleted { problem },
    }
}

#[test]
fn explore_mode_never_denies() {
    let rules = shipped();
    let mut rng = StdRng::seed_from_u64(99);
    let keys = ["Biegelinien", "vonBelastungZu,Biegelinien", "LINEAR,system"];
    let kinds = [RequestKind::NextStep, RequestKind::InputTerm, RequestKind::InputTactic, RequestKind::AutoSolve];
    let mut um = UserModel::new(Mode::Explore);
    for _ in 0..200 {
        let r = req(kinds[rng.gen_range(0..4)], keys[rng.gen_range(0..3)], rng.gen_bool(0.5));
        let (_, a) = rules.decide(&um, &r);
        assert!(matches!(a, Action::Grant | Action::AutoBlackbox), "{a:?}");
        um.update(&random_event(&mut rng, &keys));
    }
}

#[test]
fn decide_is_pure() {
    let rules = shipped();
    let mut rng = StdRng::seed_from_u64(5);
    let mut um = UserModel::new(Mode::Exercise);
    for _ in 0..100 {
        um.update(&random_event(&mut rng, &["a", "b"]));
        let r = req(RequestKind::NextStep, "a", false);
        let snapshot = um.clone();
        assert_eq!(rules.decide(&um, &r), rules.decide(&snapshot, &r));
        assert_eq!(um, snapshot);
    }
}
