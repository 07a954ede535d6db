use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use super::files::{ConstFile, MethodFile, ProblemFile, RuleSetFile, TheoryFile};
use super::{Definition, ErrorPattern, Hook, Rule, RuleSet, DEFAULT_MAX_STEPS};
use crate::program::{key_id, parse_program, Key, ProgramError, TacticProgram};
use crate::specification::{Model, ProblemNode};
use crate::terms::{parse, parse_with, var_types, Assoc, Fixity, Signature, Term, TermError, Type};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error("{file}: parse error at {position}: {message}")]
    Parse { file: String, position: String, message: String },
    #[error("dangling {kind} reference `{key}`")]
    DanglingReference { kind: String, key: String },
    #[error("cyclic imports: {}", .0.join(" -> "))]
    CyclicImports(Vec<String>),
    #[error("cyclic rule set includes: {}", .0.join(" -> "))]
    CyclicRuleSets(Vec<String>),
    #[error("sub-problem {method} expects {expected} arguments, got {found}")]
    ArityMismatch { method: String, expected: usize, found: usize },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{file}: {message}")]
    Io { file: String, message: String },
}

#[derive(Debug, Clone)]
pub struct Theorem {
    pub theory: String,
    pub rule: Rule,
    pub explanation: String,
}

#[derive(Debug, Clone)]
pub struct DefinitionEntry {
    pub theory: String,
    pub definition: Definition,
    pub symbol: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RuleSetEntry {
    pub theory: String,
    pub set: Arc<RuleSet>,
    pub file: RuleSetFile,
}

#[derive(Debug, Clone)]
pub struct Theory {
    pub name: String,
    pub imports: Vec<String>,
    /// Signature of the theory together with everything it imports.
    pub signature: Signature,
}

#[derive(Debug, Clone)]
pub struct Method {
    pub key: Key,
    pub theory: String,
    pub program: Arc<TacticProgram>,
    pub check: Option<String>,
    pub explanation: String,
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub root: PathBuf,
    pub theories: BTreeMap<String, Theory>,
    /// Theories with imports first.
    pub theory_order: Vec<String>,
    pub signature: Signature,
    pub theorems: BTreeMap<String, Theorem>,
    pub definitions: BTreeMap<String, DefinitionEntry>,
    pub rulesets: BTreeMap<String, RuleSetEntry>,
    pub error_patterns: Vec<ErrorPattern>,
    pub problems: BTreeMap<String, ProblemNode>,
    /// Top-level problem keys in file order.
    pub roots: Vec<Key>,
    pub aliases: BTreeMap<String, Key>,
    pub methods: BTreeMap<String, Method>,
    pub programs: BTreeMap<String, Arc<TacticProgram>>,
    /// Findings that do not prevent loading.
    pub warnings: Vec<String>,
}

fn io(file: &Path, e: impl std::fmt::Display) -> KbError {
    KbError::Io { file: file.display().to_string(), message: e.to_string() }
}

fn json_err(file: &Path, e: serde_json::Error) -> KbError {
    KbError::Parse {
        file: file.display().to_string(),
        position: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    }
}

fn term_err(file: &Path, what: &str, e: TermError) -> KbError {
    let position = match e.offset() {
        Some(o) => format!("{what}, offset {o}"),
        None => what.to_string(),
    };
    KbError::Parse { file: file.display().to_string(), position, message: e.to_string() }
}

fn read_json<T: serde::de::DeserializeOwned>(file: &Path) -> Result<T, KbError> {
    let text = fs::read_to_string(file).map_err(|e| io(file, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(file, e))
}

fn fixity(c: &ConstFile, file: &Path, name: &str) -> Result<Option<Fixity>, KbError> {
    let Some(prec) = c.infix else { return Ok(None) };
    let assoc = match c.assoc.as_deref().unwrap_or("left") {
        "left" => Assoc::Left,
        "right" => Assoc::Right,
        "none" => Assoc::None,
        other => {
            return Err(KbError::Parse {
                file: file.display().to_string(),
                position: format!("constant {name}"),
                message: format!("unknown associativity `{other}`"),
            })
        }
    };
    Ok(Some(Fixity { prec, assoc }))
}

/// Topological order of the import graph, imports first.
fn order_theories(files: &BTreeMap<String, TheoryFile>) -> Result<Vec<String>, KbError> {
    for (name, f) in files {
        for i in &f.imports {
            if !files.contains_key(i) {
                return Err(KbError::DanglingReference { kind: format!("import of {name}"), key: i.clone() });
            }
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        n: &String,
        files: &BTreeMap<String, TheoryFile>,
        marks: &mut BTreeMap<String, Mark>,
        stack: &mut Vec<String>,
        out: &mut Vec<String>,
    ) -> Result<(), KbError> {
        match marks.get(n) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let start = stack.iter().position(|s| s == n).unwrap_or(0);
                let mut cycle = stack[start..].to_vec();
                cycle.push(n.clone());
                return Err(KbError::CyclicImports(cycle));
            }
            None => {}
        }
        marks.insert(n.clone(), Mark::Active);
        stack.push(n.clone());
        for i in &files[n].imports {
            visit(i, files, marks, stack, out)?;
        }
        stack.pop();
        marks.insert(n.clone(), Mark::Done);
        out.push(n.clone());
        Ok(())
    }
    let mut marks = BTreeMap::new();
    let mut out = Vec::new();
    for n in files.keys() {
        visit(n, files, &mut marks, &mut Vec::new(), &mut out)?;
    }
    Ok(out)
}

/// Splits a parsed `lhs = rhs` rule.
fn split_rule(t: &Term) -> Option<(Term, Term)> {
    t.as_equation().map(|(l, r)| (l.stripped(), r.stripped()))
}

impl KnowledgeBase {
    pub fn empty() -> KnowledgeBase {
        KnowledgeBase {
            root: PathBuf::new(),
            theories: BTreeMap::new(),
            theory_order: Vec::new(),
            signature: Signature::standard(),
            theorems: BTreeMap::new(),
            definitions: BTreeMap::new(),
            rulesets: BTreeMap::new(),
            error_patterns: Vec::new(),
            problems: BTreeMap::new(),
            roots: Vec::new(),
            aliases: BTreeMap::new(),
            methods: BTreeMap::new(),
            programs: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn load(root: &Path) -> Result<KnowledgeBase, KbError> {
        let mut kb = KnowledgeBase { root: root.to_path_buf(), ..KnowledgeBase::empty() };
        let mut files = BTreeMap::new();
        let entries = fs::read_dir(root).map_err(|e| io(root, e))?;
        let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok()).map(|e| e.path()).collect();
        dirs.sort();
        for dir in &dirs {
            let tf = dir.join("theory.json");
            if dir.is_dir() && tf.is_file() {
                let name = dir.file_name().unwrap_or_default().to_string_lossy().to_string();
                files.insert(name, read_json::<TheoryFile>(&tf)?);
            }
        }
        kb.theory_order = order_theories(&files)?;
        let builtin_origin = if files.contains_key("Base") { Some("Base") } else { None };
        let mut raw_sets: BTreeMap<String, (String, RuleSetFile)> = BTreeMap::new();
        for name in kb.theory_order.clone() {
            let f = &files[&name];
            let file = root.join(&name).join("theory.json");
            let mut sig = Signature::standard();
            if let Some(origin) = builtin_origin {
                let builtins: Vec<String> = sig.constants().map(|(n, _)| n.clone()).collect();
                for b in builtins {
                    sig.set_origin(&b, origin);
                }
            }
            for i in &f.imports {
                sig.merge(&kb.theories[i].signature);
            }
            for t in &f.types {
                sig.declare_base(t);
            }
            for (cname, c) in &f.constants {
                let ty = Type::parse(&c.ty).map_err(|m| KbError::Parse {
                    file: file.display().to_string(),
                    position: format!("constant {cname}"),
                    message: m,
                })?;
                sig.declare(cname, ty);
                if let Some(fx) = fixity(c, &file, cname)? {
                    sig.set_fixity(cname, fx);
                }
                sig.set_origin(cname, &name);
            }
            if let Some(missing) = sig.undeclared_base_types().first() {
                return Err(KbError::DanglingReference { kind: "type".into(), key: missing.clone() });
            }
            for (dname, d) in &f.definitions {
                let formal = parse(&d.formal, &sig).map_err(|e| term_err(&file, &format!("definition {dname}"), e))?;
                if let Some(sym) = &d.symbol {
                    if !sig.is_const(sym) {
                        return Err(KbError::DanglingReference { kind: "definition symbol".into(), key: sym.clone() });
                    }
                }
                kb.definitions.insert(
                    dname.clone(),
                    DefinitionEntry {
                        theory: name.clone(),
                        definition: Definition {
                            name: dname.clone(),
                            formal: formal.stripped(),
                            explanation: d.explanation.clone(),
                        },
                        symbol: d.symbol.clone(),
                    },
                );
            }
            for (tname, th) in &f.theorems {
                let what = format!("theorem {tname}");
                let t = parse(&th.rule, &sig).map_err(|e| term_err(&file, &what, e))?;
                let Some((lhs, rhs)) = split_rule(&t) else {
                    return Err(KbError::Parse {
                        file: file.display().to_string(),
                        position: what,
                        message: "a rule must be an equation `lhs = rhs`".into(),
                    });
                };
                let seeds = var_types(&t);
                let mut conditions = Vec::new();
                for c in &th.conditions {
                    let ct = parse_with(c, &sig, &seeds).map_err(|e| term_err(&file, &what, e))?;
                    if ct.ty() != Some(&Type::bool()) {
                        return Err(KbError::Parse {
                            file: file.display().to_string(),
                            position: what.clone(),
                            message: format!("condition `{c}` is not a proposition"),
                        });
                    }
                    conditions.push(ct.stripped());
                }
                if let Some(prev) = kb.theorems.get(tname) {
                    kb.warnings.push(format!("theorem `{tname}` defined in {} and {name}", prev.theory));
                }
                kb.theorems.insert(
                    tname.clone(),
                    Theorem {
                        theory: name.clone(),
                        rule: Rule { name: tname.clone(), lhs, rhs, conditions },
                        explanation: th.explanation.clone(),
                    },
                );
            }
            for (sname, s) in &f.rulesets {
                match raw_sets.get_mut(sname) {
                    Some((_, prev)) => {
                        prev.rules.extend(s.rules.iter().cloned());
                        prev.include.extend(s.include.iter().cloned());
                        prev.hooks.extend(s.hooks.iter().copied());
                    }
                    None => {
                        raw_sets.insert(sname.clone(), (name.clone(), s.clone()));
                    }
                }
            }
            for ep in &f.error_patterns {
                let what = format!("error pattern {}", ep.id);
                let lhs = parse(&ep.lhs, &sig).map_err(|e| term_err(&file, &what, e))?;
                let rhs = parse_with(&ep.rhs, &sig, &var_types(&lhs)).map_err(|e| term_err(&file, &what, e))?;
                if lhs.ty() != rhs.ty() {
                    return Err(KbError::Parse {
                        file: file.display().to_string(),
                        position: what,
                        message: "sides of an error pattern differ in type".into(),
                    });
                }
                kb.error_patterns.push(ErrorPattern {
                    id: ep.id.clone(),
                    lhs: lhs.stripped(),
                    rhs: rhs.stripped(),
                    feedback: ep.feedback.clone(),
                });
            }
            kb.signature.merge(&sig);
            kb.theories.insert(name.clone(), Theory { name: name.clone(), imports: f.imports.clone(), signature: sig });
        }
        kb.resolve_rulesets(&raw_sets)?;
        for name in kb.theory_order.clone() {
            kb.load_problems(&name)?;
        }
        for name in kb.theory_order.clone() {
            kb.load_methods(&name)?;
        }
        kb.check_references()?;
        Ok(kb)
    }

    fn resolve_rulesets(&mut self, raw: &BTreeMap<String, (String, RuleSetFile)>) -> Result<(), KbError> {
        fn flatten(
            name: &str,
            raw: &BTreeMap<String, (String, RuleSetFile)>,
            stack: &mut Vec<String>,
            rules: &mut Vec<String>,
            hooks: &mut BTreeSet<Hook>,
        ) -> Result<(), KbError> {
            if stack.iter().any(|s| s == name) {
                let mut cycle = stack.clone();
                cycle.push(name.to_string());
                return Err(KbError::CyclicRuleSets(cycle));
            }
            let (_, f) = raw
                .get(name)
                .ok_or_else(|| KbError::DanglingReference { kind: "rule set".into(), key: name.to_string() })?;
            stack.push(name.to_string());
            for r in &f.rules {
                if !rules.contains(r) {
                    rules.push(r.clone());
                }
            }
            hooks.extend(f.hooks.iter().copied());
            for inc in &f.include {
                flatten(inc, raw, stack, rules, hooks)?;
            }
            stack.pop();
            Ok(())
        }
        let mut plain = BTreeMap::new();
        for (name, (theory, f)) in raw {
            let mut names = Vec::new();
            let mut hooks = BTreeSet::new();
            flatten(name, raw, &mut Vec::new(), &mut names, &mut hooks)?;
            let mut rules = Vec::new();
            for r in &names {
                let th = self
                    .theorems
                    .get(r)
                    .ok_or_else(|| KbError::DanglingReference { kind: format!("rule in {name}"), key: r.clone() })?;
                rules.push(th.rule.clone());
            }
            let mut set = RuleSet::new(name, rules, hooks.into_iter().collect());
            set.max_steps = f.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
            plain.insert(name.clone(), (theory.clone(), set, f.clone()));
        }
        let default_cond = if plain.contains_key("prover") { Some("prover".to_string()) } else { None };
        let snapshot: BTreeMap<String, Arc<RuleSet>> =
            plain.iter().map(|(k, (_, s, _))| (k.clone(), Arc::new(s.clone()))).collect();
        for (name, (theory, mut set, f)) in plain {
            let cond = f.conditions.clone().or_else(|| default_cond.clone().filter(|c| *c != name));
            if let Some(c) = cond {
                let cs = snapshot
                    .get(&c)
                    .ok_or_else(|| KbError::DanglingReference { kind: "condition rule set".into(), key: c.clone() })?;
                set.conditions = Some(cs.clone());
            }
            self.rulesets.insert(name, RuleSetEntry { theory, set: Arc::new(set), file: f });
        }
        Ok(())
    }

    fn load_problems(&mut self, theory: &str) -> Result<(), KbError> {
        let file = self.root.join(theory).join("problems.json");
        if !file.is_file() {
            return Ok(());
        }
        let nodes: Vec<ProblemFile> = read_json(&file)?;
        let sig = self.theories[theory].signature.clone();
        for n in &nodes {
            let parent = match &n.extends {
                Some(p) => {
                    let id = key_id(p);
                    if !self.problems.contains_key(&id) {
                        return Err(KbError::DanglingReference { kind: "problem (extends)".into(), key: id });
                    }
                    Some(p.clone())
                }
                None => None,
            };
            self.add_problem(n, parent, theory, &sig, &file)?;
        }
        Ok(())
    }

    fn add_problem(
        &mut self,
        f: &ProblemFile,
        parent: Option<Key>,
        theory: &str,
        sig: &Signature,
        file: &Path,
    ) -> Result<(), KbError> {
        let id = key_id(&f.key);
        if self.problems.contains_key(&id) {
            return Err(KbError::Parse {
                file: file.display().to_string(),
                position: format!("problem {id}"),
                message: "duplicate problem key".into(),
            });
        }
        let own = Model::parse(&f.model_pattern, sig)
            .map_err(|(field, i, e)| term_err(file, &format!("problem {id}, {field:?} item {i}"), e))?;
        let mut model = own.clone();
        if let Some(p) = &parent {
            let pm = &self.problems[&key_id(p)].model;
            if model.given.is_empty() {
                model.given = pm.given.clone();
            }
            if model.find.is_empty() {
                model.find = pm.find.clone();
            }
            if model.relate.is_empty() {
                model.relate = pm.relate.clone();
            }
            let mut w = pm.where_.clone();
            for c in &own.where_ {
                if !w.contains(c) {
                    w.push(c.clone());
                }
            }
            model.where_ = w;
        }
        for a in &f.aliases {
            self.aliases.insert(a.clone(), f.key.clone());
        }
        match &parent {
            Some(p) => self.problems.get_mut(&key_id(p)).expect("parent loaded").children.push(f.key.clone()),
            None => self.roots.push(f.key.clone()),
        }
        self.problems.insert(
            id,
            ProblemNode {
                key: f.key.clone(),
                theory: theory.to_string(),
                model,
                own_where: own.where_,
                methods: f.methods.clone(),
                children: Vec::new(),
                parent,
                aliases: f.aliases.clone(),
                explanation: f.explanation.clone(),
            },
        );
        for c in &f.children {
            self.add_problem(c, Some(f.key.clone()), theory, sig, file)?;
        }
        Ok(())
    }

    fn load_methods(&mut self, theory: &str) -> Result<(), KbError> {
        let dir = self.root.join(theory);
        let sig = self.theories[theory].signature.clone();
        let pdir = dir.join("programs");
        if pdir.is_dir() {
            let mut paths: Vec<PathBuf> =
                fs::read_dir(&pdir).map_err(|e| io(&pdir, e))?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
            paths.sort();
            for p in paths.into_iter().filter(|p| p.extension().is_some_and(|e| e == "prog")) {
                let text = fs::read_to_string(&p).map_err(|e| io(&p, e))?;
                let prog = parse_program(&text, &sig).map_err(|e| program_err(&p, e))?;
                let stem = p.file_stem().unwrap_or_default().to_string_lossy().to_string();
                if stem != prog.name {
                    self.warnings.push(format!("{}: program is named `{}`", p.display(), prog.name));
                }
                self.programs.insert(prog.name.clone(), Arc::new(prog));
            }
        }
        let file = dir.join("methods.json");
        if !file.is_file() {
            return Ok(());
        }
        let methods: Vec<MethodFile> = read_json(&file)?;
        for m in methods {
            let program = self
                .programs
                .get(&m.program)
                .cloned()
                .ok_or_else(|| KbError::DanglingReference { kind: "program".into(), key: m.program.clone() })?;
            self.methods.insert(
                key_id(&m.key),
                Method { key: m.key, theory: theory.to_string(), program, check: m.check, explanation: m.explanation },
            );
        }
        Ok(())
    }

    fn check_references(&self) -> Result<(), KbError> {
        let dangling = |kind: &str, key: String| KbError::DanglingReference { kind: kind.into(), key };
        for p in self.problems.values() {
            for m in &p.methods {
                if !self.methods.contains_key(&key_id(m)) {
                    return Err(dangling("method", key_id(m)));
                }
            }
        }
        for m in self.methods.values() {
            if let Some(c) = &m.check {
                if !self.rulesets.contains_key(c) {
                    return Err(dangling("rule set", c.clone()));
                }
            }
        }
        for prog in self.programs.values() {
            let guard = self.problems.get(&key_id(&prog.guard)).ok_or_else(|| dangling("guard problem", key_id(&prog.guard)))?;
            let n_given = guard.model.given.len();
            let n_all = guard.model.interface().count();
            if prog.params.len() < n_given || prog.params.len() > n_all {
                return Err(KbError::ArityMismatch {
                    method: prog.name.clone(),
                    expected: n_given,
                    found: prog.params.len(),
                });
            }
            for s in prog.rule_sets() {
                if !self.rulesets.contains_key(s) {
                    return Err(dangling("rule set", s.to_string()));
                }
            }
            for r in prog.rules() {
                if !self.theorems.contains_key(r) {
                    return Err(dangling("rule", r.to_string()));
                }
            }
            for t in prog.body.tactics() {
                if let crate::program::Tactic::SubProblem { theory, .. } = t {
                    if !self.theories.contains_key(theory) {
                        return Err(dangling("theory", theory.clone()));
                    }
                }
            }
            for (problem, method, nargs) in prog.sub_problems() {
                if !self.problems.contains_key(&key_id(problem)) {
                    return Err(dangling("problem", key_id(problem)));
                }
                let target = self.methods.get(&key_id(method)).ok_or_else(|| dangling("method", key_id(method)))?;
                if target.program.params.len() != nargs {
                    return Err(KbError::ArityMismatch {
                        method: key_id(method),
                        expected: target.program.params.len(),
                        found: nargs,
                    });
                }
            }
        }
        Ok(())
    }

    /// Resolves a problem key, its comma-joined id, or an alias.
    pub fn problem(&self, key: &str) -> Option<&ProblemNode> {
        if let Some(p) = self.problems.get(key) {
            return Some(p);
        }
        self.aliases.get(key).and_then(|k| self.problems.get(&key_id(k)))
    }

    pub fn problem_by_key(&self, key: &[String]) -> Option<&ProblemNode> {
        self.problems.get(&key_id(key)).or_else(|| match key {
            [single] => self.problem(single),
            _ => None,
        })
    }

    pub fn method(&self, key: &[String]) -> Option<&Method> {
        self.methods.get(&key_id(key))
    }

    pub fn rule_set(&self, name: &str) -> Option<Arc<RuleSet>> {
        self.rulesets.get(name).map(|e| e.set.clone())
    }

    /// Rule set discharging conditions and guards.
    pub fn prover(&self) -> Arc<RuleSet> {
        self.rule_set("prover").unwrap_or_else(|| Arc::new(RuleSet::evaluator()))
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.theorems.get(name).map(|t| &t.rule)
    }

    /// Signature of a theory's closure, or the whole KB for unknown names.
    pub fn signature_of(&self, theory: &str) -> &Signature {
        self.theories.get(theory).map(|t| &t.signature).unwrap_or(&self.signature)
    }
}

fn program_err(file: &Path, e: ProgramError) -> KbError {
    match e {
        ProgramError::DanglingReference { kind, key } => KbError::DanglingReference { kind, key },
        ProgramError::ArityMismatch { method, expected, found } => KbError::ArityMismatch { method, expected, found },
        ProgramError::Syntax { pos, message } => {
            KbError::Parse { file: file.display().to_string(), position: format!("offset {pos}"), message }
        }
        ProgramError::Term { pos, source } => KbError::Parse {
            file: file.display().to_string(),
            position: format!("offset {pos}"),
            message: source.to_string(),
        },
        other => KbError::Parse { file: file.display().to_string(), position: "program".into(), message: other.to_string() },
    }
}

/// Checks that an annotated term only uses declared constants.
pub fn undeclared_constants(t: &Term, sig: &Signature) -> Vec<String> {
    let mut out = Vec::new();
    fn walk(t: &Term, sig: &Signature, out: &mut Vec<String>) {
        match t {
            Term::Const { name, .. } if name != crate::terms::LIST => {
                if sig.lookup(name).and_then(|d| d.origin.as_ref()).is_none() && !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Term::App { head, args, .. } => {
                walk(head, sig, out);
                for a in args {
                    walk(a, sig, out);
                }
            }
            _ => {}
        }
    }
    walk(t, sig, &mut out);
    out
}
