use std::collections::BTreeSet;

use serde::Serialize;

use super::tree::{CalcItem, CalcTree, ProblemBlock};
use crate::program::render_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Header,
    Specification,
    Model,
    Solution,
    Step,
    Result,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Line {
    pub id: String,
    pub depth: usize,
    pub kind: LineKind,
    pub text: String,
    /// Tactic that produced the term, shown beside it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tactic: Option<String>,
    pub expandable: bool,
    pub expanded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct View {
    pub lines: Vec<Line>,
}

impl View {
    /// Numbered plain-text listing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.lines.iter().enumerate() {
            let mark = if !l.expandable {
                ' '
            } else if l.expanded {
                '-'
            } else {
                '+'
            };
            out.push_str(&format!("{:02} {mark} {}{}", i + 1, "  ".repeat(l.depth), l.text));
            if let Some(t) = &l.tactic {
                out.push_str(&format!("    [{t}]"));
            }
            out.push('\n');
        }
        out
    }
}

struct Builder<'a> {
    open: &'a BTreeSet<String>,
    lines: Vec<Line>,
}

impl Builder<'_> {
    fn push(&mut self, id: &str, depth: usize, kind: LineKind, text: String, tactic: Option<String>, expandable: bool) -> bool {
        let expanded = expandable && self.open.contains(id);
        self.lines.push(Line { id: id.to_string(), depth, kind, text, tactic, expandable, expanded });
        expanded
    }

    fn block(&mut self, b: &ProblemBlock, depth: usize, root: bool) {
        let header = format!("Problem ({}, {})", b.theory, render_key(&b.problem));
        let open = self.push(&b.id, depth, LineKind::Header, header, b.call.clone(), !root);
        if root || open {
            let spec = self.push(&b.spec_id(), depth + 1, LineKind::Specification, "Specification:".into(), None, true);
            if spec {
                let fields = [("Given", &b.model.given), ("Where", &b.model.where_), ("Find", &b.model.find), ("Relate", &b.model.relate)];
                for (name, items) in fields {
                    for (i, it) in items.iter().enumerate() {
                        let id = format!("{}.{}{}", b.spec_id(), name.to_lowercase(), i + 1);
                        self.push(&id, depth + 2, LineKind::Model, format!("{name}: {it}"), None, false);
                    }
                }
            }
            let sol = self.push(&b.solution_id(), depth + 1, LineKind::Solution, "Solution:".into(), None, true);
            if sol {
                for item in &b.solution {
                    self.item(item, depth + 2);
                }
            }
        }
        if let Some(r) = &b.result {
            let text = match (&b.postcondition, root) {
                (Some(p), true) => format!("{r}    (post-condition: {p})"),
                _ => r.clone(),
            };
            self.push(&format!("{}.result", b.id), depth + 1, LineKind::Result, text, None, false);
        }
    }

    fn item(&mut self, item: &CalcItem, depth: usize) {
        match item {
            CalcItem::Problem(p) => self.block(p, depth, false),
            CalcItem::Step(s) => {
                let tactic = s.tactic.clone().or_else(|| s.rule.as_ref().map(|r| r.rule.clone()));
                let open = self.push(&s.id, depth, LineKind::Step, s.term.clone(), tactic, !s.detail.is_empty());
                if open {
                    for d in &s.detail {
                        self.item(d, depth + 1);
                    }
                }
            }
        }
    }
}

/// Lines of `tree` with the items in `open` expanded.
pub fn render_view(tree: &CalcTree, open: &BTreeSet<String>) -> View {
    let mut b = Builder { open, lines: Vec::new() };
    b.block(&tree.root, 0, true);
    View { lines: b.lines }
}
