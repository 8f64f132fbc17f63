//! Project-configurable validation.
//!
//! A schema file has three sections, one rule per line:
//!
//! ```text
//! # comments start with '#'
//! [xml]
//! element doc urn title layers *
//! element m norm *
//! nest doc meta m pb
//! [grid]
//! layer pos token ^(NOUN|VERB)$
//! strict
//! [meta]
//! require urn
//! pattern urn ^urn:cts:
//! ```
//!
//! `element` lists an allowed element and its allowed attributes (`*`
//! allows any). When no `element` rule is given every element is allowed.
//! `nest` lists the elements allowed directly inside a parent; parents
//! without a `nest` rule accept any child. `layer` declares a layer's kind
//! and the pattern its values must match; empty token cells are
//! unannotated and never checked. `strict` rejects undeclared layers.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::formats::grid::unescape_cell;
use crate::formats::xml::{node_pos, parse_xml, XmlError, MILESTONES, WRAPPERS};
use crate::model::{Document, LayerKind, LayerValues, RESERVED_LAYER_NAMES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema line {line}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ElementRule {
    pub attributes: BTreeSet<String>,
    pub any_attribute: bool,
}

#[derive(Debug, Clone)]
pub struct LayerRule {
    pub kind: LayerKind,
    pub pattern: Regex,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationSchema {
    pub elements: BTreeMap<String, ElementRule>,
    pub nesting: BTreeMap<String, BTreeSet<String>>,
    pub layers: BTreeMap<String, LayerRule>,
    pub strict_layers: bool,
    pub required_meta: Vec<String>,
    pub meta_patterns: BTreeMap<String, Regex>,
}

/// Where a violation occurred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Locator {
    /// 1-based line and column in the XML source.
    Xml {
        line: u32,
        col: u32,
    },
    /// 1-based data row (0 for the header or the layer as a whole) and
    /// column name. In a document, row `i + 1` is morph `i`.
    Grid {
        row: usize,
        layer: String,
    },
    Meta {
        key: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: Locator,
    pub rule: &'static str,
    pub message: String,
}

impl Violation {
    fn new(location: Locator, rule: &'static str, message: impl Into<String>) -> Self {
        Violation {
            location,
            rule,
            message: message.into(),
        }
    }
}

/// Anything the validator accepts.
#[derive(Debug, Clone, Copy)]
pub enum Artifact<'a> {
    Xml(&'a str),
    Grid(&'a str),
    Document(&'a Document),
}

const FIXTURE_SCHEMA: &str = include_str!("../../data/fixture.schema");

impl ValidationSchema {
    /// The schema shipped with the fixture corpus.
    pub fn fixture() -> Self {
        ValidationSchema::parse(FIXTURE_SCHEMA).expect("bundled schema parses")
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let mut schema = ValidationSchema::default();
        let mut section = "";
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| SchemaError { line: line_no, message };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name {
                    "xml" => "xml",
                    "grid" => "grid",
                    "meta" => "meta",
                    other => return Err(err(format!("unknown section [{other}]"))),
                };
                continue;
            }
            let mut words = line.split_whitespace();
            let directive = words.next().unwrap_or_default();
            match (section, directive) {
                ("xml", "element") => {
                    let name = words.next().ok_or_else(|| err("element needs a name".into()))?;
                    let mut rule = ElementRule {
                        attributes: BTreeSet::new(),
                        any_attribute: false,
                    };
                    for attr in words {
                        if attr == "*" {
                            rule.any_attribute = true;
                        } else {
                            rule.attributes.insert(attr.to_string());
                        }
                    }
                    if schema.elements.insert(name.to_string(), rule).is_some() {
                        return Err(err(format!("element {name} declared twice")));
                    }
                }
                ("xml", "nest") => {
                    let parent = words.next().ok_or_else(|| err("nest needs a parent".into()))?;
                    let children = schema.nesting.entry(parent.to_string()).or_default();
                    children.extend(words.map(String::from));
                }
                ("grid", "layer") => {
                    let name = words.next().ok_or_else(|| err("layer needs a name".into()))?;
                    let kind: LayerKind = words
                        .next()
                        .ok_or_else(|| err("layer needs a kind".into()))?
                        .parse()
                        .map_err(|_| err("layer kind must be token or span".into()))?;
                    let pattern = rest_of(line, 3).unwrap_or(".*");
                    let pattern = Regex::new(pattern).map_err(|e| err(e.to_string()))?;
                    if schema
                        .layers
                        .insert(name.to_string(), LayerRule { kind, pattern })
                        .is_some()
                    {
                        return Err(err(format!("layer {name} declared twice")));
                    }
                }
                ("grid", "strict") => schema.strict_layers = true,
                ("meta", "require") => {
                    let key = words.next().ok_or_else(|| err("require needs a key".into()))?;
                    schema.required_meta.push(key.to_string());
                }
                ("meta", "pattern") => {
                    let key = words.next().ok_or_else(|| err("pattern needs a key".into()))?;
                    let pattern = rest_of(line, 2).ok_or_else(|| err("pattern needs a regex".into()))?;
                    let pattern = Regex::new(pattern).map_err(|e| err(e.to_string()))?;
                    schema.meta_patterns.insert(key.to_string(), pattern);
                }
                ("", _) => return Err(err("rule outside a section".into())),
                (s, d) => return Err(err(format!("unknown rule {d:?} in [{s}]"))),
            }
        }
        Ok(schema)
    }

    pub fn allows_element(&self, name: &str) -> bool {
        self.elements.is_empty() || self.elements.contains_key(name)
    }

    /// Layer kinds for reading grids under this schema.
    pub fn layer_kinds(&self) -> crate::formats::grid::LayerKinds {
        crate::formats::grid::LayerKinds {
            kinds: self.layers.iter().map(|(n, r)| (n.clone(), r.kind)).collect(),
            strict: self.strict_layers,
        }
    }

    fn check_value(&self, out: &mut Vec<Violation>, layer: &str, value: &str, location: Locator) {
        if value.is_empty() {
            return;
        }
        if let Some(rule) = self.layers.get(layer) {
            if !rule.pattern.is_match(value) {
                out.push(Violation::new(
                    location,
                    "grid.pattern",
                    format!("{value:?} does not match the {layer} pattern {}", rule.pattern),
                ));
            }
        }
    }

    fn check_meta<'a>(&self, out: &mut Vec<Violation>, entries: impl IntoIterator<Item = (&'a str, &'a str)>) {
        let entries: BTreeMap<&str, &str> = entries.into_iter().collect();
        for key in &self.required_meta {
            if !entries.contains_key(key.as_str()) {
                out.push(Violation::new(
                    Locator::Meta { key: key.clone() },
                    "meta.required",
                    format!("missing required metadata {key:?}"),
                ));
            }
        }
        for (key, pattern) in &self.meta_patterns {
            if let Some(value) = entries.get(key.as_str()) {
                if !pattern.is_match(value) {
                    out.push(Violation::new(
                        Locator::Meta { key: key.clone() },
                        "meta.pattern",
                        format!("{value:?} does not match {pattern}"),
                    ));
                }
            }
        }
    }

    fn check_declared(&self, out: &mut Vec<Violation>, layer: &str, kind: LayerKind, location: Locator) {
        match self.layers.get(layer) {
            Some(rule) if rule.kind != kind => out.push(Violation::new(
                location,
                "grid.kind",
                format!("layer {layer:?} must be a {} layer", rule.kind),
            )),
            None if self.strict_layers => out.push(Violation::new(
                location,
                "grid.layer",
                format!("undeclared layer {layer:?}"),
            )),
            _ => {}
        }
    }
}

fn rest_of(line: &str, skip: usize) -> Option<&str> {
    let mut rest = line;
    for _ in 0..skip {
        rest = rest.trim_start();
        let end = rest.find(char::is_whitespace)?;
        rest = &rest[end..];
    }
    let rest = rest.trim();
    (!rest.is_empty()).then_some(rest)
}

/// Checks an artifact; an empty list means it conforms.
pub fn validate(artifact: Artifact<'_>, schema: &ValidationSchema) -> Vec<Violation> {
    match artifact {
        Artifact::Xml(xml) => validate_xml(xml, schema),
        Artifact::Grid(grid) => validate_grid(grid, schema),
        Artifact::Document(doc) => validate_document(doc, schema),
    }
}

pub fn validate_document(doc: &Document, schema: &ValidationSchema) -> Vec<Violation> {
    let mut out = Vec::new();
    schema.check_meta(&mut out, doc.meta().entries());
    for layer in doc.layers() {
        let name = layer.name();
        let head = Locator::Grid {
            row: 0,
            layer: name.to_string(),
        };
        schema.check_declared(&mut out, name, layer.kind(), head);
        if schema.layers.get(name).is_some_and(|r| r.kind != layer.kind()) {
            continue;
        }
        match layer.values() {
            LayerValues::Token(values) => {
                for (i, v) in values.iter().enumerate() {
                    let at = Locator::Grid {
                        row: i + 1,
                        layer: name.to_string(),
                    };
                    schema.check_value(&mut out, name, v, at);
                }
            }
            LayerValues::Span(spans) => {
                for s in spans {
                    let at = Locator::Grid {
                        row: s.start + 1,
                        layer: name.to_string(),
                    };
                    schema.check_value(&mut out, name, &s.value, at);
                }
            }
        }
    }
    out
}

pub fn validate_grid(text: &str, schema: &ValidationSchema) -> Vec<Violation> {
    let mut out = Vec::new();
    let text = text.replace("\r\n", "\n");
    let mut lines = text.lines().peekable();
    let mut meta = Vec::new();
    while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
        let parts: Vec<&str> = line.split('\t').collect();
        match (
            parts.as_slice(),
            parts.get(1).and_then(|k| unescape_cell(k)),
            parts.get(2).and_then(|v| unescape_cell(v)),
        ) {
            ([_, _, _], Some(k), Some(v)) => meta.push((k, v)),
            _ => out.push(Violation::new(
                Locator::Meta {
                    key: parts.get(1).unwrap_or(&"").to_string(),
                },
                "grid.malformed",
                "metadata lines are '#', key, value",
            )),
        }
    }
    schema.check_meta(&mut out, meta.iter().map(|(k, v)| (k.as_str(), v.as_str())));

    let Some(header) = lines.next() else {
        out.push(Violation::new(
            Locator::Grid {
                row: 0,
                layer: String::new(),
            },
            "grid.malformed",
            "missing header row",
        ));
        return out;
    };
    let header: Vec<&str> = header.split('\t').collect();
    if header.len() < 3 || header[0] != "orig" || header[1] != "norm" || !header.contains(&"group") {
        out.push(Violation::new(
            Locator::Grid {
                row: 0,
                layer: String::new(),
            },
            "grid.malformed",
            "header must start with orig, norm and contain group",
        ));
    }

    let mut rows: Vec<Option<Vec<&str>>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() == header.len() {
            rows.push(Some(cells));
        } else {
            out.push(Violation::new(
                Locator::Grid {
                    row: i + 1,
                    layer: String::new(),
                },
                "grid.ragged",
                format!("expected {} cells, found {}", header.len(), cells.len()),
            ));
            rows.push(None);
        }
    }

    for (col, &name) in header.iter().enumerate() {
        if name == "orig" || name == "norm" {
            continue;
        }
        let cells = rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|r| (i + 1, r[col])));
        if name == "group" {
            let mut started = false;
            for (row, cell) in cells {
                match cell {
                    "B" => started = true,
                    "I" if started => {}
                    _ => out.push(Violation::new(
                        Locator::Grid {
                            row,
                            layer: name.to_string(),
                        },
                        "grid.bio",
                        format!("group cell {cell:?} must be B, or I after a B"),
                    )),
                }
            }
            continue;
        }
        if RESERVED_LAYER_NAMES.contains(&name) {
            continue;
        }
        let kind = schema.layers.get(name).map_or(LayerKind::Token, |r| r.kind);
        schema.check_declared(
            &mut out,
            name,
            kind,
            Locator::Grid {
                row: 0,
                layer: name.to_string(),
            },
        );
        let at = |row| Locator::Grid {
            row,
            layer: name.to_string(),
        };
        match kind {
            LayerKind::Token => {
                for (row, cell) in cells {
                    match unescape_cell(cell) {
                        Some(v) => schema.check_value(&mut out, name, &v, at(row)),
                        None => out.push(Violation::new(
                            at(row),
                            "grid.malformed",
                            format!("bad escape in {cell:?}"),
                        )),
                    }
                }
            }
            LayerKind::Span => {
                let mut open = false;
                for (row, cell) in cells {
                    match cell {
                        "O" => open = false,
                        "I" if open => {}
                        "I" => out.push(Violation::new(at(row), "grid.bio", "I without a preceding B")),
                        c => match c.strip_prefix("B-").and_then(unescape_cell) {
                            Some(v) => {
                                open = true;
                                schema.check_value(&mut out, name, &v, at(row));
                            }
                            None => {
                                open = false;
                                out.push(Violation::new(
                                    at(row),
                                    "grid.kind",
                                    format!("{c:?} is not a B-value, I or O cell"),
                                ));
                            }
                        },
                    }
                }
            }
        }
    }
    out
}

pub fn validate_xml(xml: &str, schema: &ValidationSchema) -> Vec<Violation> {
    let mut out = Vec::new();
    let tree = match parse_xml(xml) {
        Ok(t) => t,
        Err(XmlError::Malformed { line, col, message }) => {
            out.push(Violation::new(Locator::Xml { line, col }, "xml.malformed", message));
            return out;
        }
        Err(e) => {
            out.push(Violation::new(
                Locator::Xml { line: 1, col: 1 },
                "xml.malformed",
                e.to_string(),
            ));
            return out;
        }
    };
    let mut meta: Vec<(String, String)> = Vec::new();
    let mut undeclared = BTreeSet::new();
    for node in tree.descendants().filter(|n| n.is_element()) {
        let name = node.tag_name().name();
        let (line, col) = node_pos(node);
        let at = || Locator::Xml { line, col };
        if !schema.allows_element(name) {
            out.push(Violation::new(
                at(),
                "xml.element",
                format!("element <{name}> is not allowed"),
            ));
            continue;
        } else if let Some(rule) = schema.elements.get(name) {
            for attr in node.attributes() {
                if !rule.any_attribute && !rule.attributes.contains(attr.name()) {
                    out.push(Violation::new(
                        at(),
                        "xml.attribute",
                        format!("attribute {:?} is not allowed on <{name}>", attr.name()),
                    ));
                }
            }
        }
        if let Some(parent) = node.parent_element() {
            let pname = parent.tag_name().name();
            if schema.nesting.get(pname).is_some_and(|c| !c.contains(name)) {
                out.push(Violation::new(
                    at(),
                    "xml.nesting",
                    format!("<{name}> is not allowed inside <{pname}>"),
                ));
            }
        }

        match name {
            "doc" if node.parent_element().is_none() => {
                for attr in node.attributes().filter(|a| a.name() != "layers") {
                    meta.push((attr.name().to_string(), attr.value().to_string()));
                }
            }
            "meta" => {
                if let Some(key) = node.attribute("key") {
                    meta.push((key.to_string(), node.attribute("value").unwrap_or_default().to_string()));
                }
            }
            "m" => {
                for attr in node.attributes().filter(|a| a.name() != "norm") {
                    if undeclared.insert(attr.name().to_string()) {
                        schema.check_declared(&mut out, attr.name(), LayerKind::Token, at());
                    }
                    schema.check_value(&mut out, attr.name(), attr.value(), at());
                }
            }
            _ => {
                let layer = match name {
                    "span" => node.attribute("layer").map(|l| (l, "value")),
                    _ => MILESTONES
                        .iter()
                        .chain(WRAPPERS.iter())
                        .find(|(n, _)| *n == name)
                        .copied(),
                };
                if let Some((layer, attr)) = layer {
                    if undeclared.insert(layer.to_string()) {
                        schema.check_declared(&mut out, layer, LayerKind::Span, at());
                    }
                    schema.check_value(&mut out, layer, node.attribute(attr).unwrap_or_default(), at());
                }
            }
        }
    }
    schema.check_meta(&mut out, meta.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    out
}
