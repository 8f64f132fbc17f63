//! Working copies and their edit event logs.
//!
//! A working copy starts from a committed snapshot. Every accepted edit gets
//! the next revision number and is appended to the log; replaying the log
//! over the snapshot rebuilds the working copy. Two edits to the same cell
//! resolve to whichever the sequencer saw last.
//!
//! ```
//! use coptic_core::collab::{CellEdit, WorkingCopy, replay};
//! use coptic_core::model::{DocMeta, DocumentBuilder, Layer};
//!
//! let doc = DocumentBuilder::new(DocMeta::new())
//!     .group(&["ⲁ", "ϥ", "ⲥⲱⲧⲙ"])
//!     .build()
//!     .unwrap()
//!     .attach_layer(Layer::token("pos", ["", "", ""]).unwrap())
//!     .unwrap();
//! let mut wc = WorkingCopy::new(doc.clone());
//! wc.apply(&[CellEdit::new(2, "pos", "VERB", 0)]).unwrap();
//! wc.apply(&[CellEdit::new(2, "pos", "NOUN", 0)]).unwrap();
//! assert_eq!(wc.revision(), 2);
//! assert_eq!(wc.document().layer("pos").unwrap().token_values().unwrap()[2], "NOUN");
//! assert_eq!(replay(&doc, wc.events_since(0).unwrap()).unwrap(), *wc.document());
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Document, Layer, LayerValues, ModelError};
use crate::store::{doc_to_snapshot, snapshot_to_doc, StoreError};

#[derive(Debug, Error)]
pub enum EditError {
    #[error("edit {edit}: no token cell {index} in layer {layer:?}")]
    Target { edit: usize, index: usize, layer: String },
    #[error("edit {edit}: {source}")]
    Value { edit: usize, source: ModelError },
    #[error("edit {edit}: base revision {base} is ahead of the log at {head}")]
    FutureBase { edit: usize, base: u64, head: u64 },
    #[error("layer {0:?} already exists")]
    LayerExists(String),
    #[error("revision {since} is ahead of the log at {head}")]
    FutureRevision { since: u64, head: u64 },
    #[error("event {revision} does not apply: {source}")]
    Replay { revision: u64, source: ModelError },
    #[error("event {revision}: bad snapshot: {source}")]
    Snapshot { revision: u64, source: StoreError },
    #[error("events are not consecutive at revision {0}")]
    Gap(u64),
}

/// One cell change requested by a client.
///
/// `layer` is a token layer or `norm`. `base_revision` is the last revision
/// the client had seen; a stale base is accepted and the edit wins anyway.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellEdit {
    pub index: usize,
    pub layer: String,
    pub value: String,
    #[serde(default)]
    pub base_revision: u64,
}

impl CellEdit {
    pub fn new(index: usize, layer: &str, value: &str, base_revision: u64) -> Self {
        CellEdit {
            index,
            layer: layer.to_string(),
            value: value.to_string(),
            base_revision,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Cell {
        index: usize,
        layer: String,
        /// The value before this edit, for display only.
        old: String,
        value: String,
    },
    /// A layer that did not exist before.
    Layer { name: String, layer: LayerValues },
    /// The whole document, as a store snapshot.
    Replace { snapshot: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditEvent {
    pub revision: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Applies one event. Cell events overwrite whatever is there.
pub fn apply_event(doc: &Document, event: &EditEvent) -> Result<Document, EditError> {
    let revision = event.revision;
    let model = |source| EditError::Replay { revision, source };
    match &event.kind {
        EventKind::Cell {
            index, layer, value, ..
        } => {
            let mut doc = doc.clone();
            doc.set_cell(*index, layer, value).map_err(model)?;
            Ok(doc)
        }
        EventKind::Layer { name, layer } => {
            let layer = Layer::new(name.as_str(), layer.clone()).map_err(model)?;
            doc.attach_layer(layer).map_err(model)
        }
        EventKind::Replace { snapshot } => {
            snapshot_to_doc(snapshot).map_err(|source| EditError::Snapshot { revision, source })
        }
    }
}

/// Folds events over a document. Revisions must be consecutive.
pub fn replay(base: &Document, events: &[EditEvent]) -> Result<Document, EditError> {
    let mut doc = base.clone();
    for (i, e) in events.iter().enumerate() {
        if i > 0 && e.revision != events[i - 1].revision + 1 {
            return Err(EditError::Gap(e.revision));
        }
        doc = apply_event(&doc, e)?;
    }
    Ok(doc)
}

#[derive(Debug, Clone)]
pub struct WorkingCopy {
    base: Document,
    base_revision: u64,
    doc: Document,
    events: Vec<EditEvent>,
}

impl WorkingCopy {
    /// A working copy at revision 0.
    pub fn new(base: Document) -> Self {
        WorkingCopy {
            doc: base.clone(),
            base,
            base_revision: 0,
            events: Vec::new(),
        }
    }

    pub fn document(&self) -> &Document {
        &self.doc
    }

    pub fn revision(&self) -> u64 {
        self.events.last().map_or(0, |e| e.revision)
    }

    /// The snapshot the log is replayed over and the revision it stands at.
    pub fn base(&self) -> (&Document, u64) {
        (&self.base, self.base_revision)
    }

    /// Moves the base to the current state, as after a commit. Events stay
    /// in the log so clients that are behind can still catch up.
    pub fn rebase(&mut self) {
        self.base = self.doc.clone();
        self.base_revision = self.revision();
    }

    fn check_target(doc: &Document, i: usize, e: &CellEdit) -> Result<String, EditError> {
        let target = || EditError::Target {
            edit: i,
            index: e.index,
            layer: e.layer.clone(),
        };
        if e.layer == "norm" {
            return doc.morph(e.index).map(|m| m.surface.clone()).ok_or_else(target);
        }
        doc.layer(&e.layer)
            .and_then(Layer::token_values)
            .and_then(|v| v.get(e.index))
            .cloned()
            .ok_or_else(target)
    }

    /// Applies a batch atomically: either every edit gets a revision or
    /// none does.
    pub fn apply(&mut self, edits: &[CellEdit]) -> Result<Vec<EditEvent>, EditError> {
        let head = self.revision();
        let mut doc = self.doc.clone();
        let mut out = Vec::with_capacity(edits.len());
        for (i, e) in edits.iter().enumerate() {
            if e.base_revision > head {
                return Err(EditError::FutureBase {
                    edit: i,
                    base: e.base_revision,
                    head,
                });
            }
            let old = Self::check_target(&doc, i, e)?;
            doc.set_cell(e.index, &e.layer, &e.value)
                .map_err(|source| EditError::Value { edit: i, source })?;
            out.push(EditEvent {
                revision: head + 1 + i as u64,
                kind: EventKind::Cell {
                    index: e.index,
                    layer: e.layer.clone(),
                    old,
                    value: e.value.clone(),
                },
            });
        }
        self.doc = doc;
        self.events.extend(out.iter().cloned());
        Ok(out)
    }

    pub fn add_layer(&mut self, layer: Layer) -> Result<EditEvent, EditError> {
        if self.doc.layer(layer.name()).is_some() {
            return Err(EditError::LayerExists(layer.name().to_string()));
        }
        let event = EditEvent {
            revision: self.revision() + 1,
            kind: EventKind::Layer {
                name: layer.name().to_string(),
                layer: layer.values().clone(),
            },
        };
        self.doc = apply_event(&self.doc, &event)?;
        self.events.push(event.clone());
        Ok(event)
    }

    pub fn replace(&mut self, doc: Document) -> EditEvent {
        let event = EditEvent {
            revision: self.revision() + 1,
            kind: EventKind::Replace {
                snapshot: doc_to_snapshot(&doc),
            },
        };
        self.doc = doc;
        self.events.push(event.clone());
        event
    }

    /// Every event after `since`, in revision order.
    pub fn events_since(&self, since: u64) -> Result<&[EditEvent], EditError> {
        let head = self.revision();
        if since > head {
            return Err(EditError::FutureRevision { since, head });
        }
        let start = self.events.partition_point(|e| e.revision <= since);
        Ok(&self.events[start..])
    }

    /// Fills empty token cells and missing layers from `annotated`, which
    /// must have the same morphs. Cells that already hold a value are kept.
    pub fn fill_from(&mut self, annotated: &Document, base_revision: u64) -> Result<Vec<EditEvent>, EditError> {
        let mut edits = Vec::new();
        let mut new_layers = Vec::new();
        for layer in annotated.layers() {
            match (self.doc.layer(layer.name()), layer.token_values()) {
                (None, _) => new_layers.push(layer.clone()),
                (Some(mine), Some(theirs)) => {
                    if let Some(values) = mine.token_values() {
                        for (i, (m, t)) in values.iter().zip(theirs).enumerate() {
                            if m.is_empty() && !t.is_empty() {
                                edits.push(CellEdit::new(i, layer.name(), t, base_revision));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        let mut out = self.apply(&edits)?;
        for layer in new_layers {
            out.push(self.add_layer(layer)?);
        }
        Ok(out)
    }
}
