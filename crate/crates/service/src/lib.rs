//! Session API: every student session is a state machine kept in memory
//! and mirrored to a file-per-session store after each change.

mod api;
mod error;
mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use lucas_core::dialogue::DialogRules;
use lucas_core::knowledge::KnowledgeBase;

pub use api::router;
pub use error::ApiError;
pub use store::{Store, StoredSession};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub kb: PathBuf,
    pub store: PathBuf,
    /// Directory of instance files `<id>.json`.
    pub instances: PathBuf,
    pub port: u16,
}

pub(crate) struct Live {
    pub stored: StoredSession,
    pub session: lucas_core::interpreter::Session,
}

pub struct AppState {
    pub kb: Arc<KnowledgeBase>,
    pub rules: DialogRules,
    pub instances: PathBuf,
    pub store: Store,
    pub(crate) live: Mutex<HashMap<String, Arc<Mutex<Live>>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error("knowledge base: {0}")]
    Kb(#[from] lucas_core::knowledge::KbError),
    #[error("dialogue rules: {0}")]
    Dialog(#[from] lucas_core::dialogue::DialogError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl AppState {
    /// Loads the KB, its `dialog_rules.json` if present, and opens the store.
    pub fn open(cfg: &Config) -> Result<AppState, StartError> {
        let kb = KnowledgeBase::load(&cfg.kb)?;
        let rules_path = cfg.kb.join("dialog_rules.json");
        let rules = if rules_path.exists() { DialogRules::load(&rules_path)? } else { DialogRules::default() };
        Ok(AppState {
            kb: Arc::new(kb),
            rules,
            instances: cfg.instances.clone(),
            store: Store::open(&cfg.store)?,
            live: Mutex::new(HashMap::new()),
        })
    }
}

/// Serves until the process ends.
pub async fn serve(cfg: &Config) -> Result<(), StartError> {
    let state = Arc::new(AppState::open(cfg)?);
    let addr = SocketAddr::from(([127, 0, 0, 1], cfg.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
