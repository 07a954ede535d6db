#![allow(dead_code)]

pub mod beam;
pub mod numeric;

use std::path::{Path, PathBuf};

use lucas_core::interpreter::Session;
use lucas_core::knowledge::KnowledgeBase;
use lucas_core::specification::ProblemInstance;
use lucas_core::terms::{parse, Term};

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn kb() -> KnowledgeBase {
    KnowledgeBase::load(&root().join("kb")).expect("shipped KB loads")
}

pub fn instance(kb: &KnowledgeBase, name: &str) -> ProblemInstance {
    ProblemInstance::load(&root().join("instances").join(format!("{name}.json")), &kb.signature).expect("instance loads")
}

pub fn term(kb: &KnowledgeBase, s: &str) -> Term {
    parse(s, &kb.signature).expect("term parses").stripped()
}

/// Session on `name` in solve phase.
pub fn session(kb: &KnowledgeBase, name: &str) -> Session {
    let mut s = Session::new(instance(kb, name));
    s.skip_specification(kb).expect("instance refs are complete");
    s
}

pub fn solved(kb: &KnowledgeBase, name: &str) -> Session {
    let mut s = session(kb, name);
    s.auto_solve(kb).expect("auto_solve");
    s
}

pub const GOLDEN: [&str; 3] = ["biegelinie", "diff_chain", "expand_square"];

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.calc.json"))
}
