use std::sync::Arc;

use super::exec::{denominators, execute, resolve_tactic};
use super::tree::{assign_ids, CalcItem, CalcTree, ProblemBlock, RuleApp, Step};
use super::InterpError;
use crate::knowledge::KnowledgeBase;
use crate::program::{key_id, Key, ProgExpr, Tactic};
use crate::rewrite::{instantiate, Inst, Subst, Truth};
use crate::specification::{check_guard, check_postcondition, descriptor, formal_args, match_pattern, Model, ProblemInstance};
use crate::terms::{render, Signature, Term};

pub const DEFAULT_LOOKAHEAD: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    Exec(Tactic),
    Sub(Tactic),
    Bind(String),
    Load(String),
}

/// Flattens a program body into evaluation order.
pub fn compile(e: &ProgExpr, out: &mut Vec<Instr>) {
    match e {
        ProgExpr::Seq(a, b) => {
            compile(a, out);
            compile(b, out);
        }
        ProgExpr::Let { name, value, body } => {
            compile(value, out);
            out.push(Instr::Bind(name.clone()));
            compile(body, out);
        }
        ProgExpr::Tactic(t @ Tactic::SubProblem { .. }) => out.push(Instr::Sub(t.clone())),
        ProgExpr::Tactic(t) => out.push(Instr::Exec(t.clone())),
        ProgExpr::Ref(n) => out.push(Instr::Load(n.clone())),
    }
}

/// Interpretation of one method inside one problem block.
#[derive(Debug, Clone)]
pub struct Frame {
    pub method: Key,
    pub check: Option<String>,
    pub code: Arc<Vec<Instr>>,
    pub pc: usize,
    pub env: Subst,
    pub cur: Option<Term>,
    /// Assumptions of the block; grows as steps introduce denominators.
    pub ctx: Vec<Term>,
    /// Indices leading from the root block to this frame's block.
    pub block: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepProposal {
    pub tactic: Tactic,
    pub rendered: String,
    pub term: Option<Term>,
    /// Id of the item added to the tree.
    pub id: String,
    /// Block and index of that item.
    pub block: Vec<usize>,
    pub index: usize,
    pub check: Option<String>,
}

#[derive(Debug, Clone)]
pub struct InterpState {
    pub frames: Vec<Frame>,
    pub tree: CalcTree,
    pub lookahead: usize,
    pub instance: ProblemInstance,
    pub done: bool,
}

fn render_strs(ts: &[Term], sig: &Signature) -> Vec<String> {
    ts.iter().map(|t| render(t, sig)).collect()
}

fn method_code(kb: &KnowledgeBase, method: &[String]) -> Result<(Arc<Vec<Instr>>, Option<String>), InterpError> {
    let m = kb.method(method).ok_or_else(|| InterpError::not_found("method", &key_id(method)))?;
    let mut code = Vec::new();
    compile(&m.program.body, &mut code);
    Ok((Arc::new(code), m.check.clone()))
}

/// The model a method's guard sees, with its pattern variables bound.
fn guard_model(kb: &KnowledgeBase, method: &[String], s: &Subst) -> Result<Model, InterpError> {
    let m = kb.method(method).ok_or_else(|| InterpError::not_found("method", &key_id(method)))?;
    let g = kb
        .problem_by_key(&m.program.guard)
        .ok_or_else(|| InterpError::not_found("problem", &key_id(&m.program.guard)))?;
    let none = Inst::new();
    let inst = |ts: &[Term]| ts.iter().map(|t| instantiate(t, s, &none)).collect::<Vec<_>>();
    Ok(Model {
        given: inst(&g.model.given),
        where_: inst(&g.model.where_),
        find: inst(&g.model.find),
        relate: inst(&g.model.relate),
    })
}

fn guard(kb: &KnowledgeBase, problem: &[String], method: &[String], env: &Subst, ctx: &[Term]) -> Result<(), InterpError> {
    let g = check_guard(kb, method, env, ctx)?;
    if g.truth == Truth::True {
        return Ok(());
    }
    Err(InterpError::GuardFailed {
        problem: problem.to_vec(),
        clause: g.failing.map(|c| render(&c, &kb.signature)),
    })
}

impl InterpState {
    /// Starts the method `refs.method` on an instance whose model is
    /// `model`. The guard has to hold.
    pub fn start(
        kb: &KnowledgeBase,
        inst: &ProblemInstance,
        model: &Model,
        theory: &str,
        problem: &[String],
        method: &[String],
    ) -> Result<InterpState, InterpError> {
        let sig = &kb.signature;
        let m = kb.method(method).ok_or_else(|| InterpError::not_found("method", &key_id(method)))?;
        let gp = kb
            .problem_by_key(&m.program.guard)
            .ok_or_else(|| InterpError::not_found("problem", &key_id(&m.program.guard)))?;
        let s = match_pattern(&gp.model, model).ok_or_else(|| InterpError::GuardFailed {
            problem: problem.to_vec(),
            clause: Some("the model does not fit the method".into()),
        })?;
        let mut env = Subst::new();
        for a in formal_args(kb, method)? {
            if let Some(v) = s.get(&a.pattern_var) {
                env.insert(a.name.clone(), v.clone());
            }
        }
        guard(kb, problem, method, &env, &inst.assumptions)?;
        let (code, check) = method_code(kb, method)?;
        let root = ProblemBlock {
            id: "r".into(),
            instance: Some(inst.id.clone()),
            theory: theory.to_string(),
            problem: problem.to_vec(),
            method: method.to_vec(),
            call: None,
            model: model.to_file(sig),
            assumptions: render_strs(&inst.assumptions, sig),
            context: render_strs(&inst.assumptions, sig),
            solution: Vec::new(),
            result: None,
            postcondition: None,
        };
        let frame = Frame {
            method: method.to_vec(),
            check,
            code,
            pc: 0,
            env,
            cur: None,
            ctx: inst.assumptions.clone(),
            block: Vec::new(),
        };
        let mut st = InterpState {
            frames: vec![frame],
            tree: CalcTree { root },
            lookahead: DEFAULT_LOOKAHEAD,
            instance: inst.clone(),
            done: false,
        };
        st.settle(kb);
        Ok(st)
    }

    pub fn top(&self) -> &Frame {
        self.frames.last().expect("at least the root frame")
    }

    pub fn top_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("at least the root frame")
    }

    pub fn current_term(&self) -> Option<&Term> {
        self.top().cur.as_ref()
    }

    fn block_mut(&mut self, path: &[usize]) -> &mut ProblemBlock {
        self.tree.root.block_at_mut(path).expect("frame block exists")
    }

    /// The next instruction that is a tactic or a sub-problem call.
    pub fn peek(&self) -> Option<&Tactic> {
        if self.done {
            return None;
        }
        match self.top().code.get(self.top().pc)? {
            Instr::Exec(t) | Instr::Sub(t) => Some(t),
            _ => None,
        }
    }

    /// Problem key of the sub-problem about to be opened, if any.
    pub fn next_subproblem(&self) -> Option<&Key> {
        match self.peek()? {
            Tactic::SubProblem { problem, .. } => Some(problem),
            _ => None,
        }
    }

    /// Runs bindings and closes finished blocks up to the next tactic.
    fn settle(&mut self, kb: &KnowledgeBase) {
        loop {
            let f = self.top();
            if let Some(ins) = f.code.get(f.pc).cloned() {
                match ins {
                    Instr::Bind(n) => {
                        let f = self.top_mut();
                        let v = f.cur.clone().unwrap_or_else(|| Term::list(Vec::new()));
                        f.env.insert(n, v);
                        f.pc += 1;
                    }
                    Instr::Load(n) => {
                        let f = self.top_mut();
                        f.cur = f.env.get(&n).cloned();
                        f.pc += 1;
                    }
                    _ => return,
                }
                continue;
            }
            let sig = kb.signature.clone();
            if self.frames.len() > 1 {
                let done = self.frames.pop().expect("nested frame");
                let ctx = render_strs(&done.ctx, &sig);
                let b = self.block_mut(&done.block);
                b.result = done.cur.as_ref().map(|t| render(t, &sig));
                b.context = ctx;
                let parent = self.top_mut();
                parent.cur = done.cur;
                parent.pc += 1;
                continue;
            }
            if !self.done {
                self.done = true;
                self.finish_root(kb);
            }
            return;
        }
    }

    fn finish_root(&mut self, kb: &KnowledgeBase) {
        let sig = &kb.signature;
        let f = self.top().clone();
        let root = &mut self.tree.root;
        root.result = f.cur.as_ref().map(|t| render(t, sig));
        root.context = render_strs(&f.ctx, sig);
        let Some(result) = f.cur else { return };
        let mut solution = std::collections::BTreeMap::new();
        for item in &self.instance.formalisation.find {
            if let Some(v) = descriptor(item).and_then(|(_, a)| a.var_name()) {
                solution.insert(v.to_string(), result.clone());
            }
        }
        let verdict = match check_postcondition(kb, &self.instance, &solution, &[]) {
            Ok(pc) => match pc.truth {
                Truth::True => "true",
                Truth::False => "false",
                Truth::Unknown => "unknown",
            },
            Err(_) => "unknown",
        };
        self.tree.root.postcondition = Some(verdict.to_string());
    }

    /// Executes the next tactic of the program, or opens the next
    /// sub-problem.
    pub fn next_step(&mut self, kb: &KnowledgeBase) -> Result<StepProposal, InterpError> {
        self.settle(kb);
        if self.done {
            return Err(InterpError::AtEnd);
        }
        let f = self.top().clone();
        let sig = kb.signature.clone();
        let p = match &f.code[f.pc] {
            Instr::Exec(tac) => {
                let tac = resolve_tactic(tac, &f.env);
                let ex = execute(kb, &tac, f.cur.as_ref(), &f.ctx)?;
                let rendered = tac.render(&sig);
                let mut detail = Vec::new();
                if let Tactic::RewriteSet { set, inst } = &tac {
                    let inst: Vec<(String, String)> = inst.iter().map(|(k, v)| (k.clone(), render(v, &sig))).collect();
                    let mut t = f.cur.clone().expect("rule sets ran on a term");
                    for st in &ex.trace {
                        t = t.replace_at(&st.path, st.after.clone()).expect("trace path");
                        detail.push(CalcItem::Step(Step {
                            id: String::new(),
                            tactic: None,
                            rule: Some(RuleApp { rule: st.rule.clone(), path: st.path.clone(), set: set.clone(), inst: inst.clone() }),
                            check: None,
                            input: None,
                            term: render(&t, &sig),
                            detail: Vec::new(),
                            auto: false,
                        }));
                    }
                }
                let mut ctx = f.ctx.clone();
                denominators(&ex.term, &mut ctx);
                let block = f.block.clone();
                let b = self.block_mut(&block);
                let index = b.solution.len();
                let mut item = CalcItem::Step(Step {
                    id: String::new(),
                    tactic: Some(rendered.clone()),
                    rule: None,
                    check: None,
                    input: None,
                    term: render(&ex.term, &sig),
                    detail,
                    auto: false,
                });
                let id = b.item_id(index);
                assign_ids(&mut item, id.clone());
                b.solution.push(item);
                b.context = render_strs(&ctx, &sig);
                let top = self.top_mut();
                top.cur = Some(ex.term.clone());
                top.ctx = ctx;
                top.pc += 1;
                StepProposal { tactic: tac, rendered, term: Some(ex.term), id, block, index, check: f.check.clone() }
            }
            Instr::Sub(tac) => {
                let tac = resolve_tactic(tac, &f.env);
                let Tactic::SubProblem { theory, problem, method, args } = &tac else { unreachable!("Sub holds sub-problems") };
                let formals = formal_args(kb, method)?;
                if formals.len() != args.len() {
                    return Err(InterpError::not_applicable("SubProblem", "argument count differs from the method"));
                }
                let mut env = Subst::new();
                let mut pat = Subst::new();
                for (a, v) in formals.iter().zip(args) {
                    env.insert(a.name.clone(), v.clone());
                    pat.insert(a.pattern_var.clone(), v.clone());
                }
                guard(kb, problem, method, &env, &f.ctx)?;
                let (code, check) = method_code(kb, method)?;
                let model = guard_model(kb, method, &pat)?;
                let rendered = tac.render(&sig);
                let block = f.block.clone();
                let ctx_s = render_strs(&f.ctx, &sig);
                let b = self.block_mut(&block);
                let index = b.solution.len();
                let id = b.item_id(index);
                b.solution.push(CalcItem::Problem(ProblemBlock {
                    id: id.clone(),
                    instance: None,
                    theory: theory.clone(),
                    problem: problem.clone(),
                    method: method.clone(),
                    call: Some(rendered.clone()),
                    model: model.to_file(&sig),
                    assumptions: ctx_s.clone(),
                    context: ctx_s,
                    solution: Vec::new(),
                    result: None,
                    postcondition: None,
                }));
                let mut path = block.clone();
                path.push(index);
                self.frames.push(Frame {
                    method: method.clone(),
                    check: check.clone(),
                    code,
                    pc: 0,
                    env,
                    cur: None,
                    ctx: f.ctx.clone(),
                    block: path,
                });
                StepProposal { tactic: tac.clone(), rendered, term: None, id, block, index, check }
            }
            _ => unreachable!("settle stops at tactics"),
        };
        self.settle(kb);
        Ok(p)
    }

    /// Runs the sub-problem about to be opened to its end.
    pub fn run_subproblem(&mut self, kb: &KnowledgeBase) -> Result<Vec<StepProposal>, InterpError> {
        let depth = self.frames.len();
        let mut out = vec![self.next_step(kb)?];
        while self.frames.len() > depth && !self.done {
            out.push(self.next_step(kb)?);
        }
        Ok(out)
    }

    /// Steps to the end.
    pub fn auto_solve(&mut self, kb: &KnowledgeBase) -> Result<(), InterpError> {
        while !self.done {
            self.next_step(kb)?;
            self.settle(kb);
        }
        Ok(())
    }
}
