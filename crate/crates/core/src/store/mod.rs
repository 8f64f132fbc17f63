//! Versioned document storage.
//!
//! Each document lives in its own directory under the repository root:
//!
//! ```text
//! <root>/<doc_id>/HEAD            id of the newest commit, empty before the first
//! <root>/<doc_id>/<id>.commit     one file per commit
//! ```
//!
//! A commit file is a short header, a blank line, and the snapshot:
//!
//! ```text
//! parent 9f2c...
//! author scribe
//! timestamp 1700000000
//! message fix pos of ⲡ
//!
//! %	pos	token
//! orig	norm	group	pos
//! ...
//! ```
//!
//! The snapshot is the canonical grid preceded by one `%` line per layer
//! giving its kind. Commit ids are SHA-256 over the snapshot, parent,
//! author, timestamp and message, each prefixed by its byte length, so the
//! same commit hashes the same everywhere.

#![allow(clippy::tabs_in_doc_comments)]

mod diff;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use diff::{apply_changes, diff_documents, Change, PatchError};

use crate::formats::{doc_to_grid, escape_cell, grid_to_doc, unescape_cell, GridError, LayerKinds};
use crate::model::{Document, LayerKind};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid document id {0:?}")]
    InvalidDocId(String),
    #[error("invalid commit id {0:?}")]
    InvalidCommitId(String),
    #[error("unknown document {0:?}")]
    NotFound(String),
    #[error("document {doc_id:?} has no commit {commit:?}")]
    UnknownCommit { doc_id: String, commit: String },
    #[error("corrupt commit {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("snapshot does not parse: {0}")]
    Snapshot(#[from] GridError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// An immutable revision of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Commit {
    pub id: String,
    pub parent: Option<String>,
    pub author: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: u64,
    pub message: String,
    #[serde(skip)]
    pub snapshot: String,
}

impl Commit {
    /// Builds a commit and computes its id.
    pub fn new(snapshot: String, parent: Option<String>, author: &str, timestamp: u64, message: &str) -> Self {
        let id = commit_id(&snapshot, parent.as_deref(), author, timestamp, message);
        Commit {
            id,
            parent,
            author: author.to_string(),
            timestamp,
            message: message.to_string(),
            snapshot,
        }
    }

    pub fn document(&self) -> Result<Document, StoreError> {
        snapshot_to_doc(&self.snapshot)
    }

    fn to_file(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.parent {
            out.push_str(&format!("parent {p}\n"));
        }
        out.push_str(&format!("author {}\n", escape_cell(&self.author)));
        out.push_str(&format!("timestamp {}\n", self.timestamp));
        out.push_str(&format!("message {}\n", escape_cell(&self.message)));
        out.push('\n');
        out.push_str(&self.snapshot);
        out
    }

    fn from_file(text: &str, path: &Path) -> Result<Self, StoreError> {
        let corrupt = |message: &str| StoreError::Corrupt {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        let (header, snapshot) = text
            .split_once("\n\n")
            .ok_or_else(|| corrupt("no blank line after header"))?;
        let mut fields = BTreeMap::new();
        for line in header.lines() {
            let (k, v) = line.split_once(' ').ok_or_else(|| corrupt("bad header line"))?;
            fields.insert(k, v);
        }
        let field = |k: &str| {
            fields
                .get(k)
                .and_then(|v| unescape_cell(v))
                .ok_or_else(|| corrupt(&format!("missing {k}")))
        };
        let timestamp = field("timestamp")?.parse().map_err(|_| corrupt("bad timestamp"))?;
        let parent = fields.get("parent").map(|p| p.to_string());
        let commit = Commit::new(
            snapshot.to_string(),
            parent,
            &field("author")?,
            timestamp,
            &field("message")?,
        );
        Ok(commit)
    }
}

fn frame(hasher: &mut Sha256, bytes: &[u8]) {
    hasher.update((bytes.len() as u64).to_be_bytes());
    hasher.update(bytes);
}

/// Content hash of a commit's fields, as lowercase hex.
pub fn commit_id(snapshot: &str, parent: Option<&str>, author: &str, timestamp: u64, message: &str) -> String {
    let mut h = Sha256::new();
    frame(&mut h, b"commit-v1");
    frame(&mut h, snapshot.as_bytes());
    frame(&mut h, parent.unwrap_or_default().as_bytes());
    frame(&mut h, author.as_bytes());
    frame(&mut h, timestamp.to_string().as_bytes());
    frame(&mut h, message.as_bytes());
    hex::encode(h.finalize())
}

/// Canonical snapshot text: layer kinds, then the grid.
pub fn doc_to_snapshot(doc: &Document) -> String {
    let mut out = String::new();
    for layer in doc.layers() {
        out.push_str(&format!("%\t{}\t{}\n", layer.name(), layer.kind()));
    }
    out.push_str(&doc_to_grid(doc));
    out
}

pub fn snapshot_to_doc(snapshot: &str) -> Result<Document, StoreError> {
    let mut kinds = LayerKinds::new().strict();
    let mut rest = snapshot;
    while let Some(line_end) = rest.strip_prefix("%\t").and_then(|r| r.find('\n').map(|i| i + 2)) {
        let line = &rest[2..line_end];
        let (name, kind) = line.split_once('\t').ok_or(GridError::MissingHeader)?;
        let kind: LayerKind = kind.parse().map_err(|_| GridError::BadHeader(line.to_string()))?;
        kinds = kinds.with(name, kind);
        rest = &rest[line_end + 1..];
    }
    Ok(grid_to_doc(rest, &kinds)?)
}

/// Result of a commit attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommitOutcome {
    Created(Commit),
    /// The document equals the current head; nothing was written.
    Unchanged(Commit),
}

impl CommitOutcome {
    pub fn commit(&self) -> &Commit {
        match self {
            CommitOutcome::Created(c) | CommitOutcome::Unchanged(c) => c,
        }
    }
}

pub fn is_valid_doc_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 200
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | ':' | '-'))
}

fn is_valid_commit_id(id: &str) -> bool {
    id.len() == 64 && id.chars().all(|c| matches!(c, '0'..='9' | 'a'..='f'))
}

/// A directory of versioned documents.
///
/// Writes to one document are serialized; reads never block and only ever
/// see completed commits.
#[derive(Debug)]
pub struct Repo {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Repo {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Repo {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn doc_dir(&self, doc_id: &str) -> Result<PathBuf, StoreError> {
        if !is_valid_doc_id(doc_id) {
            return Err(StoreError::InvalidDocId(doc_id.to_string()));
        }
        Ok(self.root.join(doc_id))
    }

    fn existing_dir(&self, doc_id: &str) -> Result<PathBuf, StoreError> {
        let dir = self.doc_dir(doc_id)?;
        if dir.join("HEAD").is_file() {
            Ok(dir)
        } else {
            Err(StoreError::NotFound(doc_id.to_string()))
        }
    }

    fn lock(&self, doc_id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(doc_id.to_string()).or_default().clone()
    }

    pub fn exists(&self, doc_id: &str) -> bool {
        self.existing_dir(doc_id).is_ok()
    }

    /// Creates an empty history for `doc_id` if there is none.
    pub fn register(&self, doc_id: &str) -> Result<(), StoreError> {
        let dir = self.doc_dir(doc_id)?;
        let lock = self.lock(doc_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        if !dir.join("HEAD").is_file() {
            fs::create_dir_all(&dir)?;
            write_atomic(&dir, "HEAD", "")?;
        }
        Ok(())
    }

    /// Registered document ids, sorted.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if is_valid_doc_id(&name) && entry.path().join("HEAD").is_file() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn head(&self, doc_id: &str) -> Result<Option<String>, StoreError> {
        let dir = self.existing_dir(doc_id)?;
        let head = fs::read_to_string(dir.join("HEAD"))?;
        let head = head.trim();
        Ok((!head.is_empty()).then(|| head.to_string()))
    }

    pub fn commit(
        &self,
        doc_id: &str,
        doc: &Document,
        author: &str,
        message: &str,
    ) -> Result<CommitOutcome, StoreError> {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.commit_at(doc_id, doc, author, message, now)
    }

    /// Commits with an explicit timestamp. Registers `doc_id` on first use.
    pub fn commit_at(
        &self,
        doc_id: &str,
        doc: &Document,
        author: &str,
        message: &str,
        timestamp: u64,
    ) -> Result<CommitOutcome, StoreError> {
        self.register(doc_id)?;
        let dir = self.doc_dir(doc_id)?;
        let lock = self.lock(doc_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let snapshot = doc_to_snapshot(doc);
        let parent = self.head(doc_id)?;
        if let Some(head) = &parent {
            let head = self.get_commit(doc_id, head)?;
            if head.snapshot == snapshot {
                return Ok(CommitOutcome::Unchanged(head));
            }
        }
        let commit = Commit::new(snapshot, parent, author, timestamp, message);
        write_atomic(&dir, &format!("{}.commit", commit.id), &commit.to_file())?;
        write_atomic(&dir, "HEAD", &format!("{}\n", commit.id))?;
        Ok(CommitOutcome::Created(commit))
    }

    /// Reads one commit, checking that its content matches its id.
    pub fn get_commit(&self, doc_id: &str, id: &str) -> Result<Commit, StoreError> {
        let dir = self.existing_dir(doc_id)?;
        if !is_valid_commit_id(id) {
            return Err(StoreError::InvalidCommitId(id.to_string()));
        }
        let path = dir.join(format!("{id}.commit"));
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::UnknownCommit {
                    doc_id: doc_id.to_string(),
                    commit: id.to_string(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let commit = Commit::from_file(&text, &path)?;
        if commit.id != id {
            return Err(StoreError::Corrupt {
                path,
                message: format!("content hashes to {}", commit.id),
            });
        }
        Ok(commit)
    }

    /// Every commit from head to root, newest first.
    pub fn history(&self, doc_id: &str) -> Result<Vec<Commit>, StoreError> {
        let mut out = Vec::new();
        let mut next = self.head(doc_id)?;
        while let Some(id) = next {
            let commit = self.get_commit(doc_id, &id)?;
            next = commit.parent.clone();
            out.push(commit);
        }
        Ok(out)
    }

    pub fn checkout(&self, doc_id: &str, commit_id: &str) -> Result<Document, StoreError> {
        self.get_commit(doc_id, commit_id)?.document()
    }

    /// The document at head, if anything has been committed.
    pub fn checkout_head(&self, doc_id: &str) -> Result<Option<Document>, StoreError> {
        match self.head(doc_id)? {
            Some(id) => Ok(Some(self.checkout(doc_id, &id)?)),
            None => Ok(None),
        }
    }

    pub fn diff(&self, doc_id: &str, a: &str, b: &str) -> Result<Vec<Change>, StoreError> {
        let a = self.checkout(doc_id, a)?;
        let b = self.checkout(doc_id, b)?;
        Ok(diff_documents(&a, &b))
    }
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), StoreError> {
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}
