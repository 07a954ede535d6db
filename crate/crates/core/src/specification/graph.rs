use std::collections::BTreeMap;

use serde::Serialize;

use super::{descriptor, formal_args, SpecError};
use crate::knowledge::KnowledgeBase;
use crate::program::{key_id, Key, ProgExpr, Tactic, TacticProgram};
use crate::terms::{Term, Type};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Port {
    pub descriptor: String,
    #[serde(serialize_with = "ser_type")]
    pub ty: Type,
}

fn ser_type<S: serde::Serializer>(t: &Type, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphNode {
    pub key: Key,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
}

/// Output `output` of node `from` feeds input `input` of node `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub output: String,
    pub to: usize,
    pub input: String,
}

/// Sub-problems in their proposed execution order. Inputs not fed by an
/// edge come from the root instance or from `supplied` literals.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SubProblemGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<Edge>,
    pub supplied: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Cycle { nodes: Vec<Key> },
    UnfedInput { node: Key, item: String },
    AmbiguousInput { node: Key, item: String },
    TypeMismatch { edge: Edge, output: String, input: String },
}

fn port(item: &Term, kb: &KnowledgeBase) -> Port {
    let d = descriptor(item).map(|(d, _)| d).unwrap_or_default();
    let ty = match kb.signature.lookup(d).map(|c| c.ty.uncurry()) {
        Some((args, _)) if args.len() == 1 => args[0].clone(),
        _ => Type::base("Item"),
    };
    Port { descriptor: d.to_string(), ty }
}

/// Ports of descriptor items, e.g. of an instance's Given and Relate.
pub fn ports(kb: &KnowledgeBase, items: &[Term]) -> Vec<Port> {
    items.iter().map(|t| port(t, kb)).collect()
}

impl GraphNode {
    /// Given items as inputs, Find items as outputs.
    pub fn from_problem(kb: &KnowledgeBase, key: &[String]) -> Result<GraphNode, SpecError> {
        let p = kb.problem(&key_id(key)).ok_or_else(|| SpecError::not_found("problem", &key_id(key)))?;
        Ok(GraphNode {
            key: p.key.clone(),
            inputs: p.model.given.iter().map(|t| port(t, kb)).collect(),
            outputs: p.model.find.iter().map(|t| port(t, kb)).collect(),
        })
    }
}

impl SubProblemGraph {
    /// Connects each input to the nearest earlier node producing the same
    /// descriptor, else to any later one; inputs nobody produces are left to
    /// the root.
    pub fn connect(nodes: Vec<GraphNode>) -> SubProblemGraph {
        let mut edges = Vec::new();
        for (to, n) in nodes.iter().enumerate() {
            for inp in &n.inputs {
                let produces = |i: &usize| nodes[*i].outputs.iter().any(|o| o.descriptor == inp.descriptor);
                let from = (0..to).rev().find(produces).or_else(|| (to + 1..nodes.len()).find(produces));
                if let Some(from) = from {
                    edges.push(Edge { from, output: inp.descriptor.clone(), to, input: inp.descriptor.clone() });
                }
            }
        }
        SubProblemGraph { nodes, edges, supplied: Vec::new() }
    }

    /// The sub-problem calls of `prog` in evaluation order, connected through
    /// the let-bound names that carry their results.
    pub fn from_program(kb: &KnowledgeBase, prog: &TacticProgram) -> Result<SubProblemGraph, SpecError> {
        let mut g = SubProblemGraph::default();
        let mut producer: BTreeMap<String, usize> = BTreeMap::new();
        let mut calls = Vec::new();
        collect_calls(&prog.body, None, &mut calls);
        for (bound, t) in calls {
            let Tactic::SubProblem { problem, method, args, .. } = t else { continue };
            let idx = g.nodes.len();
            g.nodes.push(GraphNode::from_problem(kb, problem)?);
            let formals = formal_args(kb, method)?;
            for (a, f) in args.iter().zip(&formals) {
                match a.var_name().and_then(|v| producer.get(v)) {
                    Some(&from) => {
                        let output = g.nodes[from].outputs.first().map(|o| o.descriptor.clone()).unwrap_or_default();
                        g.edges.push(Edge { from, output, to: idx, input: f.descriptor.clone() });
                    }
                    None if a.var_name().is_some_and(|v| prog.params.iter().any(|(p, _)| p == v)) => {}
                    None => g.supplied.push((idx, f.descriptor.clone())),
                }
            }
            if let Some(b) = bound {
                producer.insert(b.to_string(), idx);
            }
        }
        Ok(g)
    }

    /// Exchanges two nodes and renumbers the edges accordingly.
    pub fn swap(&mut self, a: usize, b: usize) {
        self.nodes.swap(a, b);
        let re = |i: usize| if i == a { b } else if i == b { a } else { i };
        for e in &mut self.edges {
            e.from = re(e.from);
            e.to = re(e.to);
        }
        for s in &mut self.supplied {
            s.0 = re(s.0);
        }
    }
}

fn collect_calls<'a>(e: &'a ProgExpr, bound: Option<&'a str>, out: &mut Vec<(Option<&'a str>, &'a Tactic)>) {
    match e {
        ProgExpr::Let { name, value, body } => {
            collect_calls(value, Some(name), out);
            collect_calls(body, None, out);
        }
        ProgExpr::Seq(a, b) => {
            collect_calls(a, None, out);
            collect_calls(b, bound, out);
        }
        ProgExpr::Tactic(t @ Tactic::SubProblem { .. }) => out.push((bound, t)),
        _ => {}
    }
}

/// Checks the graph for cycles, unfed or doubly fed inputs and edge type
/// mismatches. On success the node order is returned.
pub fn validate_graph(g: &SubProblemGraph, root_given: &[Port]) -> Result<Vec<usize>, Vec<Violation>> {
    let mut out = Vec::new();
    let n = g.nodes.len();
    let mut indeg = vec![0usize; n];
    for e in &g.edges {
        if e.from < n && e.to < n {
            indeg[e.to] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|i| indeg[*i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = ready.pop() {
        seen += 1;
        for e in g.edges.iter().filter(|e| e.from == i) {
            indeg[e.to] -= 1;
            if indeg[e.to] == 0 {
                ready.push(e.to);
            }
        }
    }
    if seen < n {
        out.push(Violation::Cycle { nodes: (0..n).filter(|i| indeg[*i] > 0).map(|i| g.nodes[i].key.clone()).collect() });
    }
    for (i, node) in g.nodes.iter().enumerate() {
        for inp in &node.inputs {
            let feeding: Vec<&Edge> = g.edges.iter().filter(|e| e.to == i && e.input == inp.descriptor).collect();
            let supplied = g.supplied.iter().any(|(j, d)| *j == i && *d == inp.descriptor);
            let from_root = root_given.iter().any(|p| p.descriptor == inp.descriptor);
            match feeding.as_slice() {
                [] if supplied || from_root => {}
                [] => out.push(Violation::UnfedInput { node: node.key.clone(), item: inp.descriptor.clone() }),
                [e] => {
                    if e.from >= i {
                        out.push(Violation::UnfedInput { node: node.key.clone(), item: inp.descriptor.clone() });
                    }
                    let o = g.nodes[e.from].outputs.iter().find(|o| o.descriptor == e.output);
                    if let Some(o) = o {
                        if o.ty != inp.ty {
                            out.push(Violation::TypeMismatch {
                                edge: (*e).clone(),
                                output: o.ty.to_string(),
                                input: inp.ty.to_string(),
                            });
                        }
                    } else {
                        out.push(Violation::UnfedInput { node: node.key.clone(), item: inp.descriptor.clone() });
                    }
                }
                _ => out.push(Violation::AmbiguousInput { node: node.key.clone(), item: inp.descriptor.clone() }),
            }
        }
    }
    if out.is_empty() {
        Ok((0..n).collect())
    } else {
        Err(out)
    }
}
