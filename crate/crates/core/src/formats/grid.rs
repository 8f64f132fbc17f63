//! Token grid: one row per morph, one column per layer.
//!
//! ```text
//! #	urn	urn:cts:copticLit:shenoute.eagerness
//! orig	norm	group	pb	pos
//! ⲁ	ⲁ	B	B-1	AUX
//! ϥ	ϥ	I	I	PRON
//! ⲥⲱⲧⲙ	ⲥⲱⲧⲙ	I	I	VERB
//! ```
//!
//! Leading `#` lines hold metadata (`#`, key, value). The header always
//! starts with `orig` and `norm`, followed by the remaining columns in
//! alphabetical order. `group` marks bound-group starts with `B` and
//! continuations with `I`. Span layers use BIO cells (`B-value`, `I`, `O`).
//!
//! Cells are escaped: an empty value is `_`, a literal `_` is `\_`, and
//! backslash, tab, newline and carriage return are written as `\\`, `\t`,
//! `\n` and `\r`.

// The example above is real tab-separated text.
#![allow(clippy::tabs_in_doc_comments)]

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{
    BoundGroup, DocMeta, Document, Layer, LayerKind, LayerValues, ModelError, Morph, Span, RESERVED_LAYER_NAMES,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("grid has no header row")]
    MissingHeader,
    #[error("header must start with orig, norm; found {0:?}")]
    BadHeader(String),
    #[error("duplicate column {0:?}")]
    DuplicateColumn(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}, layer {layer:?}: I without a preceding B")]
    OrphanInside { row: usize, layer: String },
    #[error("row {row}, layer {layer:?}: invalid cell {cell:?}")]
    BadCell { row: usize, layer: String, cell: String },
    #[error("unknown layer {0:?}")]
    UnknownLayer(String),
    #[error("line {line}: invalid metadata line")]
    BadMeta { line: usize },
    #[error("line {line}: invalid escape in {cell:?}")]
    BadEscape { line: usize, cell: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Declared layer kinds for reading a grid.
///
/// Columns not declared are read as token layers, unless `strict` is set,
/// in which case they are an error.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LayerKinds {
    pub kinds: BTreeMap<String, LayerKind>,
    pub strict: bool,
}

impl LayerKinds {
    pub fn new() -> Self {
        LayerKinds::default()
    }

    /// The kinds of every layer in `doc`.
    pub fn of(doc: &Document) -> Self {
        LayerKinds {
            kinds: doc.layers().map(|l| (l.name().to_string(), l.kind())).collect(),
            strict: false,
        }
    }

    pub fn with(mut self, name: &str, kind: LayerKind) -> Self {
        self.kinds.insert(name.to_string(), kind);
        self
    }

    pub fn spans<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        names
            .into_iter()
            .fold(LayerKinds::new(), |k, n| k.with(n, LayerKind::Span))
    }

    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }
}

pub fn escape_cell(value: &str) -> String {
    if value.is_empty() {
        return "_".to_string();
    }
    if value == "_" {
        return "\\_".to_string();
    }
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_cell(cell: &str) -> Option<String> {
    if cell == "_" {
        return Some(String::new());
    }
    let mut out = String::with_capacity(cell.len());
    let mut chars = cell.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next()? {
            '\\' => out.push('\\'),
            't' => out.push('\t'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            '_' => out.push('_'),
            _ => return None,
        }
    }
    Some(out)
}

fn column_order(doc: &Document) -> Vec<String> {
    let mut rest: Vec<String> = doc.layers().map(|l| l.name().to_string()).collect();
    rest.push("group".to_string());
    rest.sort();
    let mut cols = vec!["orig".to_string(), "norm".to_string()];
    cols.extend(rest);
    cols
}

fn bio_cells(spans: &[Span], len: usize) -> Vec<String> {
    let mut cells = vec!["O".to_string(); len];
    for s in spans {
        cells[s.start] = format!("B-{}", escape_cell(&s.value));
        for c in &mut cells[s.start + 1..=s.end] {
            *c = "I".to_string();
        }
    }
    cells
}

/// Renders the canonical grid.
pub fn doc_to_grid(doc: &Document) -> String {
    let mut out = String::new();
    for (k, v) in doc.meta().entries() {
        out.push_str(&format!("#\t{}\t{}\n", escape_cell(k), escape_cell(v)));
    }
    let cols = column_order(doc);
    out.push_str(&cols.join("\t"));
    out.push('\n');
    let n = doc.morph_count();
    let mut columns: Vec<Vec<String>> = Vec::with_capacity(cols.len());
    for name in &cols {
        let cells = match name.as_str() {
            "orig" => doc.morphs().map(|m| escape_cell(&m.orig)).collect(),
            "norm" => doc.morphs().map(|m| escape_cell(&m.surface)).collect(),
            "group" => doc
                .groups()
                .iter()
                .flat_map(|g| (0..g.morphs.len()).map(|i| if i == 0 { "B" } else { "I" }.to_string()))
                .collect(),
            layer => match doc.layer(layer).map(Layer::values) {
                Some(LayerValues::Token(v)) => v.iter().map(|s| escape_cell(s)).collect(),
                Some(LayerValues::Span(s)) => bio_cells(s, n),
                None => unreachable!("columns come from the document"),
            },
        };
        columns.push(cells);
    }
    for row in 0..n {
        let cells: Vec<&str> = columns.iter().map(|c| c[row].as_str()).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

/// A grid split into cells but not yet interpreted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawGrid {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    /// 1-based line number of the header.
    pub header_line: usize,
    pub rows: Vec<Vec<String>>,
}

pub(crate) fn split_grid(text: &str) -> Result<RawGrid, GridError> {
    let mut lines = text.lines().enumerate().peekable();
    let mut meta = Vec::new();
    while let Some((i, line)) = lines.peek().copied() {
        if !line.starts_with('#') {
            break;
        }
        lines.next();
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 || parts[0] != "#" {
            return Err(GridError::BadMeta { line: i + 1 });
        }
        let un = |c: &str| {
            unescape_cell(c).ok_or_else(|| GridError::BadEscape {
                line: i + 1,
                cell: c.to_string(),
            })
        };
        meta.push((un(parts[1])?, un(parts[2])?));
    }
    let (header_idx, header) = lines.next().ok_or(GridError::MissingHeader)?;
    let header: Vec<String> = header.split('\t').map(String::from).collect();
    let mut rows = Vec::new();
    for (_, line) in lines {
        let cells: Vec<String> = line.split('\t').map(String::from).collect();
        let row = rows.len() + 1;
        if cells.len() != header.len() {
            return Err(GridError::Ragged {
                row,
                expected: header.len(),
                found: cells.len(),
            });
        }
        rows.push(cells);
    }
    Ok(RawGrid {
        meta,
        header,
        header_line: header_idx + 1,
        rows,
    })
}

/// Parses BIO cells into spans. Rows are 1-based in errors.
pub(crate) fn parse_bio(cells: &[&str], layer: &str) -> Result<Vec<Span>, GridError> {
    let mut spans: Vec<Span> = Vec::new();
    let mut open = false;
    for (i, cell) in cells.iter().enumerate() {
        match *cell {
            "O" => open = false,
            "I" => {
                if !open {
                    return Err(GridError::OrphanInside {
                        row: i + 1,
                        layer: layer.to_string(),
                    });
                }
                spans.last_mut().expect("open span").end = i;
            }
            c => {
                let value = c
                    .strip_prefix("B-")
                    .and_then(unescape_cell)
                    .ok_or_else(|| GridError::BadCell {
                        row: i + 1,
                        layer: layer.to_string(),
                        cell: c.to_string(),
                    })?;
                spans.push(Span::new(i, i, value));
                open = true;
            }
        }
    }
    Ok(spans)
}

/// Reads a grid back into a document.
pub fn grid_to_doc(text: &str, kinds: &LayerKinds) -> Result<Document, GridError> {
    let raw = split_grid(text)?;
    if raw.header.len() < 3 || raw.header[0] != "orig" || raw.header[1] != "norm" {
        return Err(GridError::BadHeader(raw.header.join("\t")));
    }
    let group_col = raw
        .header
        .iter()
        .position(|h| h == "group")
        .ok_or_else(|| GridError::BadHeader(raw.header.join("\t")))?;
    for (i, h) in raw.header.iter().enumerate() {
        if raw.header[..i].contains(h) {
            return Err(GridError::DuplicateColumn(h.clone()));
        }
    }

    let mut meta = DocMeta::new();
    for (k, v) in &raw.meta {
        if meta.get(k).is_some() {
            return Err(ModelError::DuplicateMetaKey(k.clone()).into());
        }
        meta.set(k, v)?;
    }

    let cell = |row: usize, col: usize| -> Result<String, GridError> {
        let c = &raw.rows[row][col];
        unescape_cell(c).ok_or_else(|| GridError::BadEscape {
            line: raw.header_line + row + 1,
            cell: c.clone(),
        })
    };

    let mut groups: Vec<Vec<Morph>> = Vec::new();
    for row in 0..raw.rows.len() {
        let morph = Morph::new(cell(row, 0)?, cell(row, 1)?);
        match raw.rows[row][group_col].as_str() {
            "B" => groups.push(vec![morph]),
            "I" if !groups.is_empty() => groups.last_mut().expect("non-empty").push(morph),
            "I" => {
                return Err(GridError::OrphanInside {
                    row: row + 1,
                    layer: "group".into(),
                })
            }
            other => {
                return Err(GridError::BadCell {
                    row: row + 1,
                    layer: "group".into(),
                    cell: other.to_string(),
                })
            }
        }
    }
    let mut next = 0;
    let groups: Vec<BoundGroup> = groups
        .into_iter()
        .map(|m| {
            let n = m.len();
            let g = BoundGroup::from_morphs(next, m);
            next += n;
            g
        })
        .collect();
    let mut doc = Document::new(meta, groups)?;

    for (col, name) in raw.header.iter().enumerate() {
        if RESERVED_LAYER_NAMES.contains(&name.as_str()) {
            continue;
        }
        let kind = match kinds.kinds.get(name) {
            Some(k) => *k,
            None if kinds.strict => return Err(GridError::UnknownLayer(name.clone())),
            None => LayerKind::Token,
        };
        let layer = match kind {
            LayerKind::Token => Layer::token(
                name.as_str(),
                (0..raw.rows.len())
                    .map(|r| cell(r, col))
                    .collect::<Result<Vec<_>, _>>()?,
            )?,
            LayerKind::Span => {
                let cells: Vec<&str> = raw.rows.iter().map(|r| r[col].as_str()).collect();
                Layer::span(name.as_str(), parse_bio(&cells, name)?)?
            }
        };
        doc = doc.attach_layer(layer)?;
    }
    Ok(doc)
}

/// Rewrites a grid in canonical form: columns reordered, LF line endings.
pub fn canonicalize_grid(text: &str, kinds: &LayerKinds) -> Result<String, GridError> {
    let normalized = text.replace("\r\n", "\n");
    Ok(doc_to_grid(&grid_to_doc(&normalized, kinds)?))
}
