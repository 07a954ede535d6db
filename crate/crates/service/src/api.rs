use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use lucas_core::dialogue::{Action, Mode, Request, RequestKind, UserEvent, UserModel};
use lucas_core::interpreter::{CalcItem, InputOutcome, Phase, ProblemBlock, Session, StepProposal};
use lucas_core::program::{parse_tactic, Key, Tactic};
use lucas_core::specification::{Field, ProblemInstance, Refs};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::store::StoredSession;
use crate::{AppState, Live};

type Shared = State<Arc<AppState>>;
type Reply = Result<Json<Value>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(summary))
        .route("/sessions/{id}/tree", get(tree))
        .route("/sessions/{id}/model", post(add_item))
        .route("/sessions/{id}/model/{field}/{index}", delete(remove_item))
        .route("/sessions/{id}/refs", post(set_refs))
        .route("/sessions/{id}/skip", post(skip))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/next", post(next))
        .route("/sessions/{id}/auto", post(auto))
        .route("/kb/definitions/{key}", get(definition))
        .route("/kb/prereq", get(prereq))
        .with_state(state)
}

fn valid_instance_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl AppState {
    fn entry(&self, id: &str) -> Result<Arc<Mutex<Live>>, ApiError> {
        let mut live = self.live.lock().expect("session table");
        if let Some(e) = live.get(id) {
            return Ok(e.clone());
        }
        let stored = self.store.load(id)?.ok_or_else(|| ApiError::not_found("session", id))?;
        let session = Session::restore(&self.kb, &stored.session).map_err(|e| ApiError::Internal(format!("cannot restore {id}: {e}")))?;
        let e = Arc::new(Mutex::new(Live { stored, session }));
        live.insert(id.to_string(), e.clone());
        Ok(e)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Live) -> T) -> Result<T, ApiError> {
        let e = self.entry(id)?;
        let g = e.lock().expect("session lock");
        Ok(f(&g))
    }

    /// Runs `f` and stores the session before answering, also when `f`
    /// fails after changing it.
    fn write<T>(&self, id: &str, f: impl FnOnce(&mut Live, &AppState) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let e = self.entry(id)?;
        let mut g = e.lock().expect("session lock");
        let before = g.session.phase;
        let out = f(&mut g, self);
        if before != Phase::Done && g.session.phase == Phase::Done {
            let problem = root_problem(&g.session);
            g.stored.user.update(&UserEvent::ProblemCompleted { problem });
        }
        g.stored.session = g.session.to_file(&self.kb);
        self.store.save(id, &g.stored)?;
        out
    }
}

fn root_problem(s: &Session) -> Key {
    s.tree().map(|t| t.root.problem.clone()).or_else(|| s.refs.problem.clone()).unwrap_or_default()
}

/// The problem a request concerns, if the session is solving.
fn request(s: &Session, kind: RequestKind) -> Option<Request> {
    let st = s.state.as_ref()?;
    let (problem, is_root) = match st.next_subproblem() {
        Some(k) => (k.clone(), false),
        None => {
            let b = st.tree.root.block_at(&st.top().block)?;
            (b.problem.clone(), st.frames.len() == 1)
        }
    };
    Some(Request { kind, problem, phase: s.phase, is_root })
}

fn decide(live: &Live, app: &AppState, kind: RequestKind) -> (Option<Request>, String, Action) {
    match request(&live.session, kind) {
        Some(r) => {
            let (id, a) = app.rules.decide(&live.stored.user, &r);
            (Some(r), id.to_string(), a)
        }
        None => (None, String::new(), Action::Grant),
    }
}

fn phase(s: &Session) -> Value {
    json!(s.phase)
}

fn proposal(p: &StepProposal) -> Value {
    json!({
        "id": p.id,
        "tactic": p.rendered,
        "term": p.term.as_ref().map(|t| lucas_core::terms::render(t, &lucas_core::terms::Signature::standard())),
    })
}

fn find<'a>(b: &'a ProblemBlock, id: &str) -> Option<&'a CalcItem> {
    fn item<'a>(i: &'a CalcItem, id: &str) -> Option<&'a CalcItem> {
        if i.id() == id {
            return Some(i);
        }
        match i {
            CalcItem::Problem(p) => find(p, id),
            CalcItem::Step(s) => s.detail.iter().find_map(|d| item(d, id)),
        }
    }
    b.solution.iter().find_map(|i| item(i, id))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    instance_id: String,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    skip_specification: bool,
}

async fn create(State(app): Shared, Json(b): Json<CreateBody>) -> Reply {
    if !valid_instance_id(&b.instance_id) {
        return Err(ApiError::not_found("instance", &b.instance_id));
    }
    let path = app.instances.join(format!("{}.json", b.instance_id));
    if !path.exists() {
        return Err(ApiError::not_found("instance", &b.instance_id));
    }
    let inst = ProblemInstance::load(&path, &app.kb.signature).map_err(|e| ApiError::Unprocessable { message: e.to_string(), offset: None })?;
    let mut session = Session::new(inst);
    if b.skip_specification {
        session.skip_specification(&app.kb)?;
    }
    let id = app.store.fresh_id();
    let stored = StoredSession { mode: b.mode, user: UserModel::new(b.mode), session: session.to_file(&app.kb) };
    app.store.save(&id, &stored)?;
    let ph = phase(&session);
    app.live.lock().expect("session table").insert(id.clone(), Arc::new(Mutex::new(Live { stored, session })));
    Ok(Json(json!({ "session_id": id, "phase": ph })))
}

async fn summary(State(app): Shared, Path(id): Path<String>) -> Reply {
    app.read(&id, |l| {
        let s = &l.session;
        Json(json!({
            "session_id": id,
            "instance_id": s.instance.id,
            "statement": s.instance.statement,
            "phase": phase(s),
            "mode": l.stored.mode,
            "refs": s.refs,
            "user": l.stored.user,
        }))
    })
}

#[derive(Deserialize)]
struct TreeQuery {
    expand: Option<String>,
}

async fn tree(State(app): Shared, Path(id): Path<String>, Query(q): Query<TreeQuery>) -> Reply {
    app.read(&id, |l| {
        let s = &l.session;
        let open: BTreeSet<String> = match &q.expand {
            Some(e) => e.split(',').filter(|x| !x.is_empty()).map(String::from).collect(),
            None => s.expanded.clone(),
        };
        let view = s.tree().map(|t| lucas_core::interpreter::render_view(t, &open));
        Json(json!({
            "session_id": id,
            "phase": phase(s),
            "model": s.model.to_file(&app.kb.signature),
            "tree": s.tree(),
            "view": view,
        }))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemBody {
    field: Field,
    item: String,
}

async fn add_item(State(app): Shared, Path(id): Path<String>, Json(b): Json<ItemBody>) -> Reply {
    app.write(&id, |l, app| {
        let st = l.session.add_item(&app.kb, b.field, &b.item)?;
        Ok(Json(json!(st)))
    })
}

async fn remove_item(State(app): Shared, Path((id, field, index)): Path<(String, String, usize)>) -> Reply {
    let field: Field = serde_json::from_value(json!(field)).map_err(|e| ApiError::Unprocessable { message: e.to_string(), offset: None })?;
    app.write(&id, |l, app| Ok(Json(json!(l.session.remove_item(&app.kb, field, index)?))))
}

async fn set_refs(State(app): Shared, Path(id): Path<String>, Json(refs): Json<Refs>) -> Reply {
    app.write(&id, |l, app| {
        let out = l.session.set_refs(&app.kb, refs)?;
        Ok(Json(json!({ "outcome": out, "phase": phase(&l.session) })))
    })
}

async fn skip(State(app): Shared, Path(id): Path<String>) -> Reply {
    app.write(&id, |l, app| {
        l.session.skip_specification(&app.kb)?;
        Ok(Json(json!({ "phase": phase(&l.session) })))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepBody {
    term: Option<String>,
    tactic: Option<String>,
}

fn rule_sets(tactic: Option<&str>, app: &AppState) -> Vec<String> {
    match tactic.and_then(|t| parse_tactic(t, &app.kb.signature).ok()) {
        Some(Tactic::RewriteSet { set, .. }) => vec![set],
        _ => Vec::new(),
    }
}

async fn step(State(app): Shared, Path(id): Path<String>, Json(b): Json<StepBody>) -> Reply {
    app.write(&id, |l, app| {
        let kind = if b.term.is_some() { RequestKind::InputTerm } else { RequestKind::InputTactic };
        let (req, rule, action) = decide(l, app, kind);
        if let Action::Deny { message } = action {
            return Ok(Json(json!({ "kind": "deny", "rule": rule, "message": message })));
        }
        let out = match (&b.term, &b.tactic) {
            (Some(t), None) => l.session.input_term(&app.kb, t)?,
            (None, Some(t)) => l.session.input_tactic(&app.kb, t)?,
            _ => return Err(ApiError::Unprocessable { message: "give either `term` or `tactic`".into(), offset: None }),
        };
        let problem = req.map(|r| r.problem).unwrap_or_default();
        let inserted = match &out {
            InputOutcome::Accepted { id, .. } | InputOutcome::Equivalent { id } => {
                let sets = rule_sets(b.tactic.as_deref(), app);
                l.stored.user.update(&UserEvent::StepAccepted { problem, rule_sets: sets });
                l.session.tree().and_then(|t| find(&t.root, id)).cloned()
            }
            InputOutcome::Rejected { .. } => {
                l.stored.user.update(&UserEvent::StepRejected { problem });
                None
            }
        };
        Ok(Json(json!({ "kind": "input", "outcome": out, "inserted": inserted, "phase": phase(&l.session) })))
    })
}

async fn next(State(app): Shared, Path(id): Path<String>) -> Reply {
    app.write(&id, |l, app| {
        let (req, rule, action) = decide(l, app, RequestKind::NextStep);
        match action {
            Action::Grant => {
                let p = l.session.next(&app.kb)?;
                if let Some(r) = req {
                    l.stored.user.update(&UserEvent::HelpRequested { problem: r.problem });
                }
                Ok(Json(json!({ "kind": "step", "rule": rule, "proposal": proposal(&p), "phase": phase(&l.session) })))
            }
            Action::CounterRequest { demand } => Ok(Json(json!({ "kind": "counter_request", "rule": rule, "demand": demand }))),
            Action::Deny { message } => Ok(Json(json!({ "kind": "deny", "rule": rule, "message": message }))),
            Action::AutoBlackbox => {
                let steps = l.session.run_subproblem(&app.kb)?;
                let steps: Vec<Value> = steps.iter().map(proposal).collect();
                Ok(Json(json!({ "kind": "auto_blackbox", "rule": rule, "steps": steps, "phase": phase(&l.session) })))
            }
        }
    })
}

async fn auto(State(app): Shared, Path(id): Path<String>) -> Reply {
    app.write(&id, |l, app| {
        let (req, rule, action) = decide(l, app, RequestKind::AutoSolve);
        match action {
            Action::Deny { message } => return Ok(Json(json!({ "kind": "deny", "rule": rule, "message": message }))),
            Action::CounterRequest { demand } => return Ok(Json(json!({ "kind": "counter_request", "rule": rule, "demand": demand }))),
            _ => {}
        }
        let r = l.session.auto_solve(&app.kb);
        if let Err(e @ lucas_core::interpreter::InterpError::Phase { .. }) = r {
            return Err(e.into());
        }
        if let Some(r) = req {
            l.stored.user.update(&UserEvent::HelpRequested { problem: r.problem });
        }
        let result = l.session.tree().and_then(|t| t.root.result.clone());
        Ok(Json(json!({
            "kind": "solved",
            "phase": phase(&l.session),
            "result": result,
            "error": r.err().map(|e| e.to_string()),
        })))
    })
}

async fn definition(State(app): Shared, Path(key): Path<String>) -> Reply {
    let l = app.kb.lookup_definition(&key).map_err(|_| ApiError::not_found("definition", &key))?;
    Ok(Json(json!(l)))
}

/// Splits `a,b,c` into the longest runs of comma-joined parts that name
/// problems, so both `Biegelinien` and `Baustatik,Biegelinien` work.
fn problem_keys(app: &AppState, s: &str) -> Result<Vec<String>, ApiError> {
    let parts: Vec<&str> = s.split(',').filter(|p| !p.is_empty()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < parts.len() {
        let hit = (i + 1..=parts.len()).rev().find(|&j| app.kb.problem(&parts[i..j].join(",")).is_some());
        let Some(j) = hit else { return Err(ApiError::not_found("problem", parts[i])) };
        out.push(parts[i..j].join(","));
        i = j;
    }
    Ok(out)
}

async fn prereq(State(app): Shared, Query(q): Query<BTreeMap<String, String>>) -> Reply {
    let keys = problem_keys(&app, q.get("problems").map(String::as_str).unwrap_or(""))?;
    let items = app.kb.knowledge_closure(&keys).map_err(|e| ApiError::not_found("problem", &e.to_string()))?;
    let order: Vec<String> = items.iter().map(|i| i.to_string()).collect();
    Ok(Json(json!({ "items": items, "order": order })))
}

#[cfg(test)]
mod tests {
    use super::valid_instance_id;

    #[test]
    fn instance_ids_are_plain_names() {
        assert!(valid_instance_id("eq_linear"));
        assert!(!valid_instance_id("../secret"));
        assert!(!valid_instance_id(""));
    }
}
