use serde::{Deserialize, Serialize};

use crate::model::{BoundGroup, DocMeta, Document, Layer, LayerValues, ModelError, Morph, Span};

/// One difference between two documents.
///
/// A `Structure` change replaces the groups and drops every layer; the
/// layers of the target then follow as `LayerAdded`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Change {
    Structure {
        /// Each group as its morphs' `(orig, norm)` pairs.
        groups: Vec<Vec<(String, String)>>,
    },
    MetaSet {
        key: String,
        old: Option<String>,
        new: Option<String>,
    },
    MetaReordered {
        keys: Vec<String>,
    },
    LayerRemoved {
        name: String,
    },
    LayerAdded {
        name: String,
        layer: LayerValues,
    },
    Cell {
        index: usize,
        layer: String,
        old: String,
        new: String,
    },
    SpanRemoved {
        layer: String,
        span: Span,
    },
    SpanAdded {
        layer: String,
        span: Span,
    },
}

fn same_structure(a: &Document, b: &Document) -> bool {
    a.groups().len() == b.groups().len()
        && a.groups().iter().zip(b.groups()).all(|(x, y)| {
            x.morphs.len() == y.morphs.len() && x.morphs.iter().zip(&y.morphs).all(|(m, n)| m.orig == n.orig)
        })
}

fn meta_changes(a: &DocMeta, b: &DocMeta, out: &mut Vec<Change>) {
    let mut simulated = a.clone();
    for (key, old) in a.entries() {
        if b.get(key).is_none() {
            out.push(Change::MetaSet {
                key: key.to_string(),
                old: Some(old.to_string()),
                new: None,
            });
            simulated.remove(key);
        }
    }
    for (key, new) in b.entries() {
        let old = a.get(key);
        if old != Some(new) {
            out.push(Change::MetaSet {
                key: key.to_string(),
                old: old.map(String::from),
                new: Some(new.to_string()),
            });
            simulated.set(key, new).expect("value taken from a valid document");
        }
    }
    if simulated.pairs() != b.pairs() {
        out.push(Change::MetaReordered {
            keys: b.pairs().iter().map(|(k, _)| k.clone()).collect(),
        });
    }
}

/// The changes that turn `a` into `b`, at cell granularity.
pub fn diff_documents(a: &Document, b: &Document) -> Vec<Change> {
    let mut out = Vec::new();
    let structural = !same_structure(a, b);
    if structural {
        out.push(Change::Structure {
            groups: b
                .groups()
                .iter()
                .map(|g| g.morphs.iter().map(|m| (m.orig.clone(), m.surface.clone())).collect())
                .collect(),
        });
    }
    meta_changes(a.meta(), b.meta(), &mut out);
    if structural {
        for layer in b.layers() {
            out.push(Change::LayerAdded {
                name: layer.name().to_string(),
                layer: layer.values().clone(),
            });
        }
        return out;
    }

    let mut cells = Vec::new();
    let mut spans_removed = Vec::new();
    let mut spans_added = Vec::new();
    for (m, n) in a.morphs().zip(b.morphs()) {
        if m.surface != n.surface {
            cells.push(Change::Cell {
                index: m.index,
                layer: "norm".into(),
                old: m.surface.clone(),
                new: n.surface.clone(),
            });
        }
    }
    for layer in a.layers() {
        let other = b.layer(layer.name());
        if other.is_none_or(|o| o.kind() != layer.kind()) {
            out.push(Change::LayerRemoved {
                name: layer.name().to_string(),
            });
        }
    }
    for layer in b.layers() {
        let name = layer.name().to_string();
        match (a.layer(&name).map(Layer::values), layer.values()) {
            (Some(LayerValues::Token(old)), LayerValues::Token(new)) => {
                for (i, (o, n)) in old.iter().zip(new).enumerate() {
                    if o != n {
                        cells.push(Change::Cell {
                            index: i,
                            layer: name.clone(),
                            old: o.clone(),
                            new: n.clone(),
                        });
                    }
                }
            }
            (Some(LayerValues::Span(old)), LayerValues::Span(new)) => {
                for s in old.iter().filter(|s| !new.contains(s)) {
                    spans_removed.push(Change::SpanRemoved {
                        layer: name.clone(),
                        span: s.clone(),
                    });
                }
                for s in new.iter().filter(|s| !old.contains(s)) {
                    spans_added.push(Change::SpanAdded {
                        layer: name.clone(),
                        span: s.clone(),
                    });
                }
            }
            _ => out.push(Change::LayerAdded {
                name,
                layer: layer.values().clone(),
            }),
        }
    }
    out.extend(cells);
    out.extend(spans_removed);
    out.extend(spans_added);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("cell {index} of {layer:?} is {found:?}, expected {expected:?}")]
    Conflict {
        index: usize,
        layer: String,
        expected: String,
        found: String,
    },
    #[error("span {span:?} is not in layer {layer:?}")]
    MissingSpan { layer: String, span: Span },
    #[error("layer {0:?} is not a span layer")]
    NotSpanLayer(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn edit_spans(
    doc: &Document,
    layer: &str,
    f: impl FnOnce(&mut Vec<Span>) -> Result<(), PatchError>,
) -> Result<Document, PatchError> {
    let mut spans = doc
        .layer(layer)
        .ok_or_else(|| ModelError::UnknownLayer(layer.to_string()))?
        .spans()
        .ok_or_else(|| PatchError::NotSpanLayer(layer.to_string()))?
        .to_vec();
    f(&mut spans)?;
    Ok(doc.replace_layer(Layer::span(layer, spans)?)?)
}

/// Applies changes in order. Cell changes check their old value.
pub fn apply_changes(doc: &Document, changes: &[Change]) -> Result<Document, PatchError> {
    let mut doc = doc.clone();
    for change in changes {
        doc = match change {
            Change::Structure { groups } => {
                let mut next = 0;
                let groups = groups
                    .iter()
                    .map(|g| {
                        let morphs: Vec<Morph> = g.iter().map(|(o, n)| Morph::new(o.as_str(), n.as_str())).collect();
                        let group = BoundGroup::from_morphs(next, morphs);
                        next += g.len();
                        group
                    })
                    .collect();
                Document::new(doc.meta().clone(), groups)?
            }
            Change::MetaSet { key, new, .. } => {
                let mut meta = doc.meta().clone();
                match new {
                    Some(v) => meta.set(key, v)?,
                    None => meta.remove(key),
                }
                doc.with_meta(meta)
            }
            Change::MetaReordered { keys } => {
                let mut meta = doc.meta().clone();
                meta.reorder(keys);
                doc.with_meta(meta)
            }
            Change::LayerRemoved { name } => doc.remove_layer(name)?,
            Change::LayerAdded { name, layer } => doc.attach_layer(Layer::new(name.as_str(), layer.clone())?)?,
            Change::Cell { index, layer, old, new } => {
                let found = if layer == "norm" {
                    doc.morph(*index).map(|m| m.surface.clone())
                } else {
                    doc.layer(layer)
                        .and_then(Layer::token_values)
                        .and_then(|v| v.get(*index))
                        .cloned()
                };
                match found {
                    Some(f) if f != *old => {
                        return Err(PatchError::Conflict {
                            index: *index,
                            layer: layer.clone(),
                            expected: old.clone(),
                            found: f,
                        })
                    }
                    _ => {}
                }
                doc.set_cell(*index, layer, new)?;
                doc
            }
            Change::SpanRemoved { layer, span } => edit_spans(&doc, layer, |spans| {
                let pos = spans
                    .iter()
                    .position(|s| s == span)
                    .ok_or_else(|| PatchError::MissingSpan {
                        layer: layer.clone(),
                        span: span.clone(),
                    })?;
                spans.remove(pos);
                Ok(())
            })?,
            Change::SpanAdded { layer, span } => edit_spans(&doc, layer, |spans| {
                spans.push(span.clone());
                Ok(())
            })?,
        };
    }
    Ok(doc)
}
