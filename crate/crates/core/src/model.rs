//! The multilayer document model.
//!
//! A [`Document`] is an ordered list of bound groups, each holding one or
//! more morphs, plus any number of named annotation [`Layer`]s and a block
//! of metadata. Morph indices are global and contiguous from zero; every
//! layer addresses morphs by that index.
//!
//! Documents are plain values. Operations that "modify" a document return a
//! new one and leave their inputs untouched.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Names that are structural columns rather than free annotation layers.
///
/// `orig` and `norm` expose the morph strings themselves, `group` exposes
/// the bound-group boundaries.
pub const RESERVED_LAYER_NAMES: [&str; 3] = ["orig", "norm", "group"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("bound group {group} has no morphs")]
    EmptyGroup { group: usize },
    #[error("morph {index} has an empty surface form")]
    EmptySurface { index: usize },
    #[error("bound group {group}: span [{first}, {last}] does not continue at morph {expected}")]
    NonContiguous {
        group: usize,
        first: usize,
        last: usize,
        expected: usize,
    },
    #[error("bound group {group}: orig {orig:?} is not the concatenation of its morphs")]
    OrigMismatch { group: usize, orig: String },
    #[error("layer {0:?} is already attached")]
    DuplicateLayer(String),
    #[error("layer {name:?} has {found} values but the document has {expected} morphs")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("layer {name:?}: span [{start}, {end}] is outside the document (0..{len})")]
    SpanOutOfBounds {
        name: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("layer {name:?}: span [{start}, {end}] is reversed")]
    ReversedSpan { name: String, start: usize, end: usize },
    #[error("layer {name:?}: spans starting at {first} and {second} overlap")]
    OverlappingSpans { name: String, first: usize, second: usize },
    #[error("invalid layer name {0:?}")]
    InvalidLayerName(String),
    #[error("layer name {0:?} is reserved")]
    ReservedLayerName(String),
    #[error("no layer named {0:?}")]
    UnknownLayer(String),
    #[error("morph index {index} is out of range (document has {len} morphs)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid citation urn {0:?}")]
    InvalidUrn(String),
    #[error("duplicate metadata key {0:?}")]
    DuplicateMetaKey(String),
    #[error("metadata key {0:?} is reserved")]
    ReservedMetaKey(String),
}

/// One minimal grammatical unit inside a bound group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Morph {
    /// Normalized form.
    pub surface: String,
    /// Form as transcribed.
    pub orig: String,
    /// Global 0-based position; assigned by [`Document::new`].
    pub index: usize,
}

impl Morph {
    pub fn new(orig: impl Into<String>, surface: impl Into<String>) -> Self {
        Morph {
            surface: surface.into(),
            orig: orig.into(),
            index: 0,
        }
    }

    /// A morph whose normalized form equals its transcription.
    pub fn plain(text: impl Into<String>) -> Self {
        let text = text.into();
        Morph::new(text.clone(), text)
    }
}

/// A whitespace-delimited chunk of writing and the morphs it fuses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundGroup {
    pub orig: String,
    pub morphs: Vec<Morph>,
    /// Inclusive `[first, last]` morph index range.
    pub span: (usize, usize),
}

impl BoundGroup {
    /// Builds a group starting at morph `first`; `orig` is the concatenation
    /// of the morph transcriptions.
    pub fn from_morphs(first: usize, morphs: Vec<Morph>) -> Self {
        let orig = morphs.iter().map(|m| m.orig.as_str()).collect();
        let last = (first + morphs.len()).saturating_sub(1);
        let morphs = morphs
            .into_iter()
            .enumerate()
            .map(|(i, m)| Morph { index: first + i, ..m })
            .collect();
        BoundGroup {
            orig,
            morphs,
            span: (first, last),
        }
    }

    /// Normalized form of the whole group.
    pub fn surface(&self) -> String {
        self.morphs.iter().map(|m| m.surface.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Token,
    Span,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Token => "token",
            LayerKind::Span => "span",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LayerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token" => Ok(LayerKind::Token),
            "span" => Ok(LayerKind::Span),
            other => Err(format!("unknown layer kind {other:?}")),
        }
    }
}

/// An inclusive `[start, end]` range of morphs carrying one value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub value: String,
}

impl Span {
    pub fn new(start: usize, end: usize, value: impl Into<String>) -> Self {
        Span {
            start,
            end,
            value: value.into(),
        }
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerValues {
    Token(Vec<String>),
    Span(Vec<Span>),
}

/// A named annotation layer.
///
/// Span layers are kept sorted by start index and never overlap, so two
/// layers holding the same annotations always compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layer {
    name: String,
    values: LayerValues,
}

/// Layer names are identifiers: a letter or underscore followed by letters,
/// digits, `_`, `.` or `-`.
pub fn is_valid_layer_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

fn check_layer_name(name: &str) -> Result<(), ModelError> {
    if !is_valid_layer_name(name) {
        return Err(ModelError::InvalidLayerName(name.to_string()));
    }
    if RESERVED_LAYER_NAMES.contains(&name) {
        return Err(ModelError::ReservedLayerName(name.to_string()));
    }
    Ok(())
}

impl Layer {
    pub fn token<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        check_layer_name(&name)?;
        Ok(Layer {
            name,
            values: LayerValues::Token(values.into_iter().map(Into::into).collect()),
        })
    }

    pub fn span(name: impl Into<String>, spans: Vec<Span>) -> Result<Self, ModelError> {
        let name = name.into();
        check_layer_name(&name)?;
        let mut spans = spans;
        spans.sort();
        for s in &spans {
            if s.end < s.start {
                return Err(ModelError::ReversedSpan {
                    name,
                    start: s.start,
                    end: s.end,
                });
            }
        }
        for pair in spans.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(ModelError::OverlappingSpans {
                    name,
                    first: pair[0].start,
                    second: pair[1].start,
                });
            }
        }
        Ok(Layer {
            name,
            values: LayerValues::Span(spans),
        })
    }

    pub fn new(name: impl Into<String>, values: LayerValues) -> Result<Self, ModelError> {
        match values {
            LayerValues::Token(v) => Layer::token(name, v),
            LayerValues::Span(s) => Layer::span(name, s),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> LayerKind {
        match self.values {
            LayerValues::Token(_) => LayerKind::Token,
            LayerValues::Span(_) => LayerKind::Span,
        }
    }

    pub fn values(&self) -> &LayerValues {
        &self.values
    }

    pub fn token_values(&self) -> Option<&[String]> {
        match &self.values {
            LayerValues::Token(v) => Some(v),
            LayerValues::Span(_) => None,
        }
    }

    pub fn spans(&self) -> Option<&[Span]> {
        match &self.values {
            LayerValues::Span(v) => Some(v),
            LayerValues::Token(_) => None,
        }
    }

    /// The span covering `index`, if any.
    pub fn span_at(&self, index: usize) -> Option<&Span> {
        self.spans()?.iter().find(|s| s.contains(index))
    }

    /// Value at a morph: the token value, or the covering span's value.
    pub fn value_at(&self, index: usize) -> Option<&str> {
        match &self.values {
            LayerValues::Token(v) => v.get(index).map(String::as_str),
            LayerValues::Span(_) => self.span_at(index).map(|s| s.value.as_str()),
        }
    }

    fn check_against(&self, len: usize) -> Result<(), ModelError> {
        match &self.values {
            LayerValues::Token(v) if v.len() != len => Err(ModelError::Arity {
                name: self.name.clone(),
                expected: len,
                found: v.len(),
            }),
            LayerValues::Token(_) => Ok(()),
            LayerValues::Span(spans) => match spans.iter().find(|s| s.end >= len) {
                Some(s) => Err(ModelError::SpanOutOfBounds {
                    name: self.name.clone(),
                    start: s.start,
                    end: s.end,
                    len,
                }),
                None => Ok(()),
            },
        }
    }
}

/// A canonical text service identifier, `urn:cts:<namespace>:<work-path>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Urn(String);

impl Urn {
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        let mut parts = s.splitn(4, ':');
        let ok = parts.next() == Some("urn")
            && parts.next() == Some("cts")
            && parts.next().is_some_and(|ns| !ns.is_empty())
            && parts.next().is_some_and(|work| !work.is_empty());
        if ok && !s.chars().any(char::is_whitespace) {
            Ok(Urn(s.to_string()))
        } else {
            Err(ModelError::InvalidUrn(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn namespace(&self) -> &str {
        self.0.split(':').nth(2).unwrap_or_default()
    }

    /// Everything after the namespace, including any passage reference.
    pub fn work(&self) -> &str {
        self.0.splitn(4, ':').nth(3).unwrap_or_default()
    }
}

impl fmt::Display for Urn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Document metadata: citation urn, title, and an ordered key/value list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct DocMeta {
    urn: Option<Urn>,
    title: Option<String>,
    pairs: Vec<(String, String)>,
}

impl DocMeta {
    pub fn new() -> Self {
        DocMeta::default()
    }

    pub fn with_urn(mut self, urn: &str) -> Result<Self, ModelError> {
        self.urn = Some(Urn::parse(urn)?);
        Ok(self)
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn with_pair(mut self, key: &str, value: impl Into<String>) -> Result<Self, ModelError> {
        self.push(key, value)?;
        Ok(self)
    }

    pub fn urn(&self) -> Option<&Urn> {
        self.urn.as_ref()
    }

    pub fn title(&self) -> Option<&str> {
        self.title.as_deref()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn set_urn(&mut self, urn: Option<Urn>) {
        self.urn = urn;
    }

    pub fn set_title(&mut self, title: Option<String>) {
        self.title = title;
    }

    /// Appends a new key. `urn` and `title` have dedicated setters.
    pub fn push(&mut self, key: &str, value: impl Into<String>) -> Result<(), ModelError> {
        if key == "urn" || key == "title" {
            return Err(ModelError::ReservedMetaKey(key.to_string()));
        }
        if self.pairs.iter().any(|(k, _)| k == key) {
            return Err(ModelError::DuplicateMetaKey(key.to_string()));
        }
        self.pairs.push((key.to_string(), value.into()));
        Ok(())
    }

    /// Sets any key, `urn` and `title` included. Existing pairs keep their
    /// position; new ones are appended.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        match key {
            "urn" => self.urn = Some(Urn::parse(value)?),
            "title" => self.title = Some(value.to_string()),
            _ => match self.pairs.iter_mut().find(|(k, _)| k == key) {
                Some(pair) => pair.1 = value.to_string(),
                None => self.pairs.push((key.to_string(), value.to_string())),
            },
        }
        Ok(())
    }

    pub fn remove(&mut self, key: &str) {
        match key {
            "urn" => self.urn = None,
            "title" => self.title = None,
            _ => self.pairs.retain(|(k, _)| k != key),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        match key {
            "urn" => self.urn.as_ref().map(Urn::as_str),
            "title" => self.title.as_deref(),
            _ => self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()),
        }
    }

    /// All entries in canonical order: urn, title, then the pairs.
    pub fn entries(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::with_capacity(self.pairs.len() + 2);
        if let Some(urn) = &self.urn {
            out.push(("urn", urn.as_str()));
        }
        if let Some(title) = &self.title {
            out.push(("title", title.as_str()));
        }
        out.extend(self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        out
    }

    /// Reorders the pairs to follow `keys`; keys not listed keep their
    /// relative order after the listed ones.
    pub fn reorder(&mut self, keys: &[String]) {
        let mut rest = std::mem::take(&mut self.pairs);
        let mut ordered = Vec::with_capacity(rest.len());
        for key in keys {
            if let Some(pos) = rest.iter().position(|(k, _)| k == key) {
                ordered.push(rest.remove(pos));
            }
        }
        ordered.extend(rest);
        self.pairs = ordered;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Document {
    meta: DocMeta,
    groups: Vec<BoundGroup>,
    layers: BTreeMap<String, Layer>,
    len: usize,
}

impl Document {
    /// Checks that the group spans tile `[0, N)` and assigns morph indices.
    pub fn new(meta: DocMeta, groups: Vec<BoundGroup>) -> Result<Self, ModelError> {
        let mut next = 0;
        let mut groups = groups;
        for (gi, group) in groups.iter_mut().enumerate() {
            if group.morphs.is_empty() {
                return Err(ModelError::EmptyGroup { group: gi });
            }
            let (first, last) = group.span;
            if first != next || last < first || last - first + 1 != group.morphs.len() {
                return Err(ModelError::NonContiguous {
                    group: gi,
                    first,
                    last,
                    expected: next,
                });
            }
            let joined: String = group.morphs.iter().map(|m| m.orig.as_str()).collect();
            if joined != group.orig {
                return Err(ModelError::OrigMismatch {
                    group: gi,
                    orig: group.orig.clone(),
                });
            }
            for (offset, morph) in group.morphs.iter_mut().enumerate() {
                morph.index = first + offset;
                if morph.surface.is_empty() {
                    return Err(ModelError::EmptySurface { index: morph.index });
                }
            }
            next = last + 1;
        }
        Ok(Document {
            meta,
            groups,
            layers: BTreeMap::new(),
            len: next,
        })
    }

    pub fn empty(meta: DocMeta) -> Self {
        Document {
            meta,
            groups: Vec::new(),
            layers: BTreeMap::new(),
            len: 0,
        }
    }

    pub fn meta(&self) -> &DocMeta {
        &self.meta
    }

    pub fn groups(&self) -> &[BoundGroup] {
        &self.groups
    }

    pub fn morph_count(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn morphs(&self) -> impl Iterator<Item = &Morph> + '_ {
        self.groups.iter().flat_map(|g| g.morphs.iter())
    }

    pub fn morph(&self, index: usize) -> Option<&Morph> {
        let gi = self.group_of(index)?;
        let g = &self.groups[gi];
        g.morphs.get(index - g.span.0)
    }

    /// Index of the group containing morph `index`.
    pub fn group_of(&self, index: usize) -> Option<usize> {
        if index >= self.len {
            return None;
        }
        self.groups
            .binary_search_by(|g| {
                if g.span.1 < index {
                    std::cmp::Ordering::Less
                } else if g.span.0 > index {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .ok()
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> + '_ {
        self.layers.values()
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.get(name)
    }

    pub fn has_layer(&self, name: &str) -> bool {
        self.layers.contains_key(name)
    }

    /// Normalized forms in document order; the `norm` column.
    pub fn surfaces(&self) -> Vec<&str> {
        self.morphs().map(|m| m.surface.as_str()).collect()
    }

    /// Returns a copy with `layer` attached. Fails if the name is taken.
    pub fn attach_layer(&self, layer: Layer) -> Result<Self, ModelError> {
        if self.layers.contains_key(layer.name()) {
            return Err(ModelError::DuplicateLayer(layer.name().to_string()));
        }
        self.replace_layer(layer)
    }

    /// Returns a copy with `layer` attached, replacing any layer of that name.
    pub fn replace_layer(&self, layer: Layer) -> Result<Self, ModelError> {
        layer.check_against(self.len)?;
        let mut doc = self.clone();
        doc.layers.insert(layer.name.clone(), layer);
        Ok(doc)
    }

    pub fn remove_layer(&self, name: &str) -> Result<Self, ModelError> {
        let mut doc = self.clone();
        doc.layers
            .remove(name)
            .ok_or_else(|| ModelError::UnknownLayer(name.to_string()))?;
        Ok(doc)
    }

    pub fn with_meta(&self, meta: DocMeta) -> Self {
        Document { meta, ..self.clone() }
    }

    /// Sets one token-layer cell, or a morph's normalized form when `layer`
    /// is `norm`.
    pub fn set_cell(&mut self, index: usize, layer: &str, value: &str) -> Result<(), ModelError> {
        if index >= self.len {
            return Err(ModelError::IndexOutOfRange { index, len: self.len });
        }
        if layer == "norm" {
            if value.is_empty() {
                return Err(ModelError::EmptySurface { index });
            }
            let gi = self.group_of(index).expect("index checked above");
            let g = &mut self.groups[gi];
            g.morphs[index - g.span.0].surface = value.to_string();
            return Ok(());
        }
        match self.layers.get_mut(layer).map(|l| &mut l.values) {
            Some(LayerValues::Token(values)) => {
                values[index] = value.to_string();
                Ok(())
            }
            _ => Err(ModelError::UnknownLayer(layer.to_string())),
        }
    }

    /// Replaces the whole group structure, keeping metadata and dropping
    /// every layer that no longer fits the new morph count.
    pub fn with_groups(&self, groups: Vec<BoundGroup>) -> Result<Self, ModelError> {
        let mut doc = Document::new(self.meta.clone(), groups)?;
        for layer in self.layers.values() {
            if layer.check_against(doc.len).is_ok() {
                doc.layers.insert(layer.name.clone(), layer.clone());
            }
        }
        Ok(doc)
    }
}

/// Incremental construction of a document from morph strings.
#[derive(Debug, Default)]
pub struct DocumentBuilder {
    meta: DocMeta,
    groups: Vec<BoundGroup>,
    next: usize,
}

impl DocumentBuilder {
    pub fn new(meta: DocMeta) -> Self {
        DocumentBuilder {
            meta,
            ..Default::default()
        }
    }

    /// Adds a group whose morphs are already normalized.
    pub fn group<S: AsRef<str>>(self, morphs: &[S]) -> Self {
        self.group_of(morphs.iter().map(|m| Morph::plain(m.as_ref())).collect())
    }

    pub fn group_of(mut self, morphs: Vec<Morph>) -> Self {
        let n = morphs.len();
        self.groups.push(BoundGroup::from_morphs(self.next, morphs));
        self.next += n;
        self
    }

    pub fn build(self) -> Result<Document, ModelError> {
        Document::new(self.meta, self.groups)
    }
}
