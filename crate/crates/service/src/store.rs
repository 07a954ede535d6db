use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use lucas_core::dialogue::{Mode, UserModel};
use lucas_core::interpreter::SessionFile;
use serde::{Deserialize, Serialize};

/// What is kept on disk per session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredSession {
    pub mode: Mode,
    pub user: UserModel,
    pub session: SessionFile,
}

/// One JSON file per session, replaced atomically on every write.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    next: AtomicU64,
}

fn number(id: &str) -> Option<u64> {
    id.strip_prefix('s')?.parse().ok()
}

pub fn valid_id(id: &str) -> bool {
    number(id).is_some()
}

impl Store {
    pub fn open(dir: &Path) -> std::io::Result<Store> {
        fs::create_dir_all(dir)?;
        let mut max = 0;
        for e in fs::read_dir(dir)? {
            let p = e?.path();
            if p.extension().is_some_and(|x| x == "json") {
                if let Some(n) = p.file_stem().and_then(|s| s.to_str()).and_then(number) {
                    max = max.max(n);
                }
            }
        }
        Ok(Store { dir: dir.to_path_buf(), next: AtomicU64::new(max + 1) })
    }

    pub fn fresh_id(&self) -> String {
        format!("s{}", self.next.fetch_add(1, Ordering::SeqCst))
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    pub fn save(&self, id: &str, s: &StoredSession) -> std::io::Result<()> {
        let tmp = self.dir.join(format!(".{id}.json.tmp"));
        let text = serde_json::to_string_pretty(s).map_err(std::io::Error::other)?;
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, self.path(id))?;
        if let Ok(d) = fs::File::open(&self.dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }

    pub fn load(&self, id: &str) -> std::io::Result<Option<StoredSession>> {
        if !valid_id(id) {
            return Ok(None);
        }
        match fs::read_to_string(self.path(id)) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(std::io::Error::other),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}
