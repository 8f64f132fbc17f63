//! Native interchange: the whole document as JSON.
//!
//! ```json
//! {
//!   "meta": {"urn": "urn:cts:copticLit:shenoute.eagerness", "pairs": [["language", "cop"]]},
//!   "groups": [{"orig": "ⲁϥ", "morphs": [{"orig": "ⲁ", "norm": "ⲁ"}, {"orig": "ϥ", "norm": "ϥ"}]}],
//!   "layers": [
//!     {"name": "pos", "kind": "token", "values": ["AUX", "PRON"]},
//!     {"name": "pb", "kind": "span", "spans": [{"start": 0, "end": 1, "value": "1"}]}
//!   ]
//! }
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BoundGroup, DocMeta, Document, Layer, LayerValues, ModelError, Morph, Span, Urn};

#[derive(Debug, Error)]
pub enum InterchangeError {
    #[error("invalid interchange JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("group {group}: orig {orig:?} is not the concatenation of its morphs")]
    GroupOrig { group: usize, orig: String },
    #[error("layer {name:?}: a {kind} layer needs {field}")]
    LayerShape {
        name: String,
        kind: &'static str,
        field: &'static str,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    urn: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    #[serde(default)]
    pairs: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MorphJson {
    orig: String,
    norm: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GroupJson {
    orig: String,
    morphs: Vec<MorphJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpanJson {
    start: usize,
    end: usize,
    value: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerJson {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spans: Option<Vec<SpanJson>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DocJson {
    meta: MetaJson,
    groups: Vec<GroupJson>,
    layers: Vec<LayerJson>,
}

pub fn doc_to_interchange(doc: &Document) -> String {
    let meta = doc.meta();
    let json = DocJson {
        meta: MetaJson {
            urn: meta.urn().map(|u| u.as_str().to_string()),
            title: meta.title().map(String::from),
            pairs: meta.pairs().to_vec(),
        },
        groups: doc
            .groups()
            .iter()
            .map(|g| GroupJson {
                orig: g.orig.clone(),
                morphs: g
                    .morphs
                    .iter()
                    .map(|m| MorphJson {
                        orig: m.orig.clone(),
                        norm: m.surface.clone(),
                    })
                    .collect(),
            })
            .collect(),
        layers: doc
            .layers()
            .map(|l| match l.values() {
                LayerValues::Token(v) => LayerJson {
                    name: l.name().to_string(),
                    kind: "token".into(),
                    values: Some(v.clone()),
                    spans: None,
                },
                LayerValues::Span(s) => LayerJson {
                    name: l.name().to_string(),
                    kind: "span".into(),
                    values: None,
                    spans: Some(
                        s.iter()
                            .map(|s| SpanJson {
                                start: s.start,
                                end: s.end,
                                value: s.value.clone(),
                            })
                            .collect(),
                    ),
                },
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&json).expect("plain data serializes");
    out.push('\n');
    out
}

pub fn interchange_to_doc(text: &str) -> Result<Document, InterchangeError> {
    let json: DocJson = serde_json::from_str(text)?;
    let mut meta = DocMeta::new();
    meta.set_urn(json.meta.urn.as_deref().map(Urn::parse).transpose()?);
    meta.set_title(json.meta.title);
    for (k, v) in json.meta.pairs {
        meta.push(&k, v)?;
    }
    let mut groups = Vec::with_capacity(json.groups.len());
    let mut next = 0;
    for (gi, g) in json.groups.into_iter().enumerate() {
        let morphs: Vec<Morph> = g.morphs.into_iter().map(|m| Morph::new(m.orig, m.norm)).collect();
        let n = morphs.len();
        let group = BoundGroup::from_morphs(next, morphs);
        if group.orig != g.orig {
            return Err(InterchangeError::GroupOrig {
                group: gi,
                orig: g.orig,
            });
        }
        if n == 0 {
            return Err(ModelError::EmptyGroup { group: gi }.into());
        }
        next += n;
        groups.push(group);
    }
    let mut doc = Document::new(meta, groups)?;
    for l in json.layers {
        let shape = |kind, field| InterchangeError::LayerShape {
            name: l.name.clone(),
            kind,
            field,
        };
        let layer = match l.kind.as_str() {
            "token" => Layer::token(l.name.as_str(), l.values.ok_or_else(|| shape("token", "values"))?)?,
            "span" => Layer::span(
                l.name.as_str(),
                l.spans
                    .ok_or_else(|| shape("span", "spans"))?
                    .into_iter()
                    .map(|s| Span::new(s.start, s.end, s.value))
                    .collect(),
            )?,
            _ => return Err(shape("token or span", "a kind")),
        };
        doc = doc.attach_layer(layer)?;
    }
    Ok(doc)
}
