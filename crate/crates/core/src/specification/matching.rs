use serde::Serialize;

use super::{descriptor, Field, Model};
use crate::knowledge::RuleSet;
use crate::rewrite::{normalize, Inst};
use crate::terms::{render, Signature, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
    Superfluous,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemFeedback {
    pub field: Field,
    /// Position in the user's field; absent for missing items.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    /// The user's item, or just the descriptor of a missing one.
    pub item: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFeedback {
    pub items: Vec<ItemFeedback>,
    pub complete: bool,
}

fn norm(rs: &RuleSet, t: &Term) -> Term {
    normalize(rs, t, &Inst::new()).unwrap_or_else(|_| t.clone())
}

fn head(t: &Term) -> Option<&str> {
    descriptor(t).map(|(d, _)| d)
}

/// Classifies every user item against the hidden formalisation. Items are
/// compared after normalization with `rs`.
pub fn match_model(pattern: &Model, user: &Model, formalisation: &Model, rs: &RuleSet, sig: &Signature) -> ModelFeedback {
    let mut items = Vec::new();
    let mut complete = true;
    for f in Field::ALL {
        let formal: Vec<Term> = formalisation.field(f).iter().map(|t| norm(rs, t)).collect();
        let mut matched = vec![false; formal.len()];
        for (i, u) in user.field(f).iter().enumerate() {
            let nu = norm(rs, u);
            let verdict = if let Some(j) = (0..formal.len()).find(|&j| !matched[j] && formal[j] == nu) {
                matched[j] = true;
                Verdict::Correct
            } else if f == Field::Where {
                if formal.is_empty() {
                    Verdict::Superfluous
                } else {
                    Verdict::Incorrect
                }
            } else {
                let d = head(u);
                let open = (0..formal.len()).any(|j| !matched[j] && head(&formal[j]) == d);
                let expected = pattern.field(f).iter().any(|p| head(p) == d)
                    && !formal.iter().any(|t| head(t) == d);
                if d.is_some() && (open || expected) {
                    Verdict::Incorrect
                } else {
                    Verdict::Superfluous
                }
            };
            items.push(ItemFeedback { field: f, index: Some(i), item: render(u, sig), verdict });
        }
        for (j, t) in formalisation.field(f).iter().enumerate() {
            if !matched[j] {
                complete = false;
                let item = head(t).map(str::to_string).unwrap_or_default();
                items.push(ItemFeedback { field: f, index: None, item, verdict: Verdict::Missing });
            }
        }
    }
    ModelFeedback { items, complete }
}
