use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use coptic_core::collab::WorkingCopy;
use coptic_core::formats::ValidationSchema;
use coptic_core::model::{DocMeta, Document};
use coptic_core::pipeline::LexiconRegistry;
use coptic_core::store::{is_valid_doc_id, Repo, StoreError};
use thiserror::Error;
use tokio::sync::watch;

use crate::config::Config;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error("lexicons: {0}")]
    Lexicon(#[from] coptic_core::pipeline::PipelineError),
    #[error("schema {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One document's live state. The mutex is the per-document sequencer; the
/// watch channel carries the latest revision to long-polling readers.
pub struct Session {
    copy: Mutex<WorkingCopy>,
    revision: watch::Sender<u64>,
}

impl Session {
    fn new(base: Document) -> Self {
        Session {
            copy: Mutex::new(WorkingCopy::new(base)),
            revision: watch::Sender::new(0),
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, WorkingCopy> {
        self.copy.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Wakes readers waiting for revisions past the current one.
    pub fn publish(&self, revision: u64) {
        self.revision.send_replace(revision);
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.revision.subscribe()
    }
}

pub struct AppState {
    pub repo: Repo,
    pub lexicons: LexiconRegistry,
    pub schemas: BTreeMap<String, ValidationSchema>,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

impl AppState {
    pub fn new(repo: Repo, lexicons: LexiconRegistry, schemas: BTreeMap<String, ValidationSchema>) -> Self {
        AppState {
            repo,
            lexicons,
            schemas,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Self, StartupError> {
        let repo = Repo::open(cfg.data_dir.join("store"))?;
        let mut lexicons = LexiconRegistry::with_fixture();
        if let Some(dir) = &cfg.lexicon_dir {
            lexicons.load_dir(dir)?;
        }
        let mut schemas = BTreeMap::new();
        schemas.insert("fixture".to_string(), ValidationSchema::fixture());
        if let Some(dir) = &cfg.schema_dir {
            load_schemas(dir, &mut schemas)?;
        }
        Ok(AppState::new(repo, lexicons, schemas))
    }

    fn sessions(&self) -> MutexGuard<'_, HashMap<String, Arc<Session>>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// The live session for a stored document, opened from its head commit
    /// on first use.
    pub fn session(&self, doc_id: &str) -> Result<Arc<Session>, StoreError> {
        let mut sessions = self.sessions();
        if let Some(s) = sessions.get(doc_id) {
            return Ok(s.clone());
        }
        if !is_valid_doc_id(doc_id) {
            return Err(StoreError::InvalidDocId(doc_id.to_string()));
        }
        if !self.repo.exists(doc_id) {
            return Err(StoreError::NotFound(doc_id.to_string()));
        }
        let base = self
            .repo
            .checkout_head(doc_id)?
            .unwrap_or_else(|| Document::empty(DocMeta::new()));
        let s = Arc::new(Session::new(base));
        sessions.insert(doc_id.to_string(), s.clone());
        Ok(s)
    }

    /// Like [`AppState::session`], registering the document first.
    pub fn create_session(&self, doc_id: &str) -> Result<Arc<Session>, StoreError> {
        self.repo.register(doc_id)?;
        self.session(doc_id)
    }

    /// Stored documents plus any that only exist as working copies.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = self.repo.list()?;
        ids.extend(self.sessions().keys().cloned());
        ids.sort();
        ids.dedup();
        Ok(ids)
    }
}

fn load_schemas(dir: &Path, out: &mut BTreeMap<String, ValidationSchema>) -> Result<(), StartupError> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let file = entry.file_name().to_string_lossy().into_owned();
        let Some(id) = file.strip_suffix(".schema") else {
            continue;
        };
        let schema = ValidationSchema::parse(&fs::read_to_string(entry.path())?).map_err(|e| StartupError::Schema {
            path: entry.path().display().to_string(),
            message: e.to_string(),
        })?;
        out.insert(id.to_string(), schema);
    }
    Ok(())
}
