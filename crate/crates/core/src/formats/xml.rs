//! Diplomatic transcription XML.
//!
//! ```xml
//! <doc urn="urn:cts:copticLit:shenoute.eagerness" title="Eagerness" layers="pb pos">
//!   <meta key="repository" value="IFAO"/>
//! <pb n="1"/><m pos="AUX">ⲁ</m><m pos="PRON">ϥ</m><m norm="ⲥⲱⲧⲙ" pos="VERB">ⲥⲱ̅ⲧⲙ</m>
//! </doc>
//! ```
//!
//! Text is split into bound groups at whitespace, and punctuation stands
//! alone, as in [`split_bound_groups`]. Markup inside a run of text
//! introduces a morph boundary; `<m>` marks one morph explicitly, with an
//! optional `norm` attribute and one attribute per token layer.
//!
//! `pb`, `cb` and `lb` are milestones: each opens a span that runs until the
//! next milestone of the same name or the end of the document, valued by
//! `n`. A milestone with `break="no"` also joins the text on either side
//! into one group, which is how hyphenated line breaks are written.
//! `hi`, `gap` and `note` wrap text and become spans valued by `rend`,
//! `reason` and `text`. Any other span layer is written with the generic
//! `<span layer="mwe" value="ⲉⲃⲟⲗ ϩⲛ">` wrapper.
//!
//! Metadata lives in the `urn` and `title` attributes of `<doc>` and in
//! `<meta>` elements. Any other `<doc>` attribute is read as a metadata
//! pair, except `layers`, which lists the document's layers so that empty
//! ones survive. Generic span layers are listed as `name:span`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::formats::schema::ValidationSchema;
use crate::model::{BoundGroup, DocMeta, Document, Layer, LayerKind, LayerValues, ModelError, Morph, Span};
use crate::segment::{is_punctuation, split_bound_groups};

/// Milestone elements and their value attribute.
pub const MILESTONES: [(&str, &str); 3] = [("pb", "n"), ("cb", "n"), ("lb", "n")];

/// Wrapping elements and their value attribute, outermost first when two
/// cover the same morphs.
pub const WRAPPERS: [(&str, &str); 3] = [("gap", "reason"), ("hi", "rend"), ("note", "text")];

/// Every element of the dialect.
pub const ELEMENTS: [&str; 10] = ["doc", "meta", "m", "pb", "cb", "lb", "gap", "hi", "note", "span"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XmlError {
    #[error("malformed XML at {line}:{col}: {message}")]
    Malformed { line: u32, col: u32, message: String },
    #[error("root element must be <doc>, found <{0}>")]
    Root(String),
    #[error("element <{name}> at {line}:{col} is not allowed")]
    UnknownElement { name: String, line: u32, col: u32 },
    #[error("<{name}> at {line}:{col}: {message}")]
    Structure {
        name: String,
        line: u32,
        col: u32,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("layer {layer:?} cannot be written as XML: {reason}")]
pub struct XmlExportError {
    pub layer: String,
    pub reason: String,
}

fn milestone_attr(name: &str) -> Option<&'static str> {
    MILESTONES.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

fn wrapper_attr(name: &str) -> Option<&'static str> {
    WRAPPERS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

fn is_span_element(name: &str) -> bool {
    milestone_attr(name).is_some() || wrapper_attr(name).is_some()
}

pub(crate) fn parse_xml(xml: &str) -> Result<roxmltree::Document<'_>, XmlError> {
    roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        XmlError::Malformed {
            line: pos.row,
            col: pos.col,
            message: e.to_string(),
        }
    })
}

pub(crate) fn node_pos(node: roxmltree::Node<'_, '_>) -> (u32, u32) {
    let pos = node.document().text_pos_at(node.range().start);
    (pos.row, pos.col)
}

/// Reads a transcription. Unknown elements are unwrapped.
pub fn xml_to_doc(xml: &str) -> Result<Document, XmlError> {
    read(xml, None)
}

/// Reads a transcription, rejecting any element `schema` does not allow.
pub fn xml_to_doc_strict(xml: &str, schema: &ValidationSchema) -> Result<Document, XmlError> {
    read(xml, Some(schema))
}

#[derive(Default)]
struct Reader {
    groups: Vec<Vec<Morph>>,
    current: Vec<Morph>,
    piece: String,
    pending_break: bool,
    /// Set by a joining milestone: whitespace is ignored until more text.
    glue: bool,
    /// Morphs finished so far.
    next: usize,
    milestones: BTreeMap<String, (usize, String)>,
    spans: BTreeMap<String, Vec<Span>>,
    tokens: BTreeMap<String, BTreeMap<usize, String>>,
}

impl Reader {
    fn flush_piece(&mut self) {
        if !self.piece.is_empty() {
            let text = std::mem::take(&mut self.piece);
            self.push_morph(Morph::plain(text));
        }
    }

    fn push_morph(&mut self, morph: Morph) {
        self.glue = false;
        if self.pending_break {
            self.close_group();
        }
        self.current.push(morph);
        self.next += 1;
    }

    fn close_group(&mut self) {
        self.pending_break = false;
        if !self.current.is_empty() {
            self.groups.push(std::mem::take(&mut self.current));
        }
    }

    fn text(&mut self, text: &str) {
        for c in text.chars() {
            if c.is_whitespace() {
                if self.glue {
                    continue;
                }
                self.flush_piece();
                if !self.current.is_empty() {
                    self.pending_break = true;
                }
            } else if is_punctuation(c) {
                self.flush_piece();
                self.close_group();
                self.push_morph(Morph::plain(c));
                self.close_group();
            } else {
                if self.pending_break {
                    self.close_group();
                }
                self.glue = false;
                self.piece.push(c);
            }
        }
    }

    fn add_span(&mut self, layer: &str, start: usize, value: String) {
        let spans = self.spans.entry(layer.to_string()).or_default();
        if start < self.next {
            spans.push(Span::new(start, self.next - 1, value));
        }
    }

    fn milestone(&mut self, name: &str, value: String, joins: bool) {
        self.flush_piece();
        if joins {
            self.pending_break = false;
            self.glue = true;
        }
        if let Some((start, old)) = self.milestones.remove(name) {
            self.add_span(name, start, old);
        }
        self.spans.entry(name.to_string()).or_default();
        self.milestones.insert(name.to_string(), (self.next, value));
    }

    fn finish(mut self, meta: DocMeta, declared: &[String]) -> Result<Document, XmlError> {
        self.flush_piece();
        self.close_group();
        for (name, (start, value)) in std::mem::take(&mut self.milestones) {
            self.add_span(&name, start, value);
        }
        let mut first = 0;
        let groups = self
            .groups
            .into_iter()
            .map(|morphs| {
                let n = morphs.len();
                let g = BoundGroup::from_morphs(first, morphs);
                first += n;
                g
            })
            .collect();
        let mut doc = Document::new(meta, groups)?;
        let len = doc.morph_count();
        for name in declared {
            if let Some(name) = name.strip_suffix(":span") {
                self.spans.entry(name.to_string()).or_default();
            } else if is_span_element(name) || self.spans.contains_key(name) {
                self.spans.entry(name.clone()).or_default();
            } else {
                self.tokens.entry(name.clone()).or_default();
            }
        }
        for (name, spans) in self.spans {
            doc = doc.attach_layer(Layer::span(name, spans)?)?;
        }
        for (name, cells) in self.tokens {
            let values: Vec<String> = (0..len).map(|i| cells.get(&i).cloned().unwrap_or_default()).collect();
            doc = doc.attach_layer(Layer::token(name, values)?)?;
        }
        Ok(doc)
    }
}

fn structure(node: roxmltree::Node<'_, '_>, message: impl Into<String>) -> XmlError {
    let (line, col) = node_pos(node);
    XmlError::Structure {
        name: node.tag_name().name().to_string(),
        line,
        col,
        message: message.into(),
    }
}

fn read(xml: &str, schema: Option<&ValidationSchema>) -> Result<Document, XmlError> {
    let tree = parse_xml(xml)?;
    let root = tree.root_element();
    if root.tag_name().name() != "doc" {
        return Err(XmlError::Root(root.tag_name().name().to_string()));
    }
    if let Some(schema) = schema {
        for node in root.descendants().filter(|n| n.is_element()) {
            let name = node.tag_name().name();
            if !schema.allows_element(name) {
                let (line, col) = node_pos(node);
                return Err(XmlError::UnknownElement {
                    name: name.to_string(),
                    line,
                    col,
                });
            }
        }
    }

    let mut meta = DocMeta::new();
    let mut declared = Vec::new();
    for attr in root.attributes() {
        match attr.name() {
            "layers" => declared = attr.value().split_whitespace().map(String::from).collect(),
            key => meta.push_any(key, attr.value())?,
        }
    }
    let mut reader = Reader::default();
    walk(root, &mut reader, &mut meta)?;
    reader.finish(meta, &declared)
}

fn walk(node: roxmltree::Node<'_, '_>, r: &mut Reader, meta: &mut DocMeta) -> Result<(), XmlError> {
    for child in node.children() {
        if child.is_text() {
            r.text(child.text().unwrap_or_default());
            continue;
        }
        if !child.is_element() {
            continue;
        }
        let name = child.tag_name().name();
        match name {
            "meta" => {
                let key = child.attribute("key").ok_or_else(|| structure(child, "missing key"))?;
                meta.push_any(key, child.attribute("value").unwrap_or_default())?;
            }
            "m" => read_morph(child, r)?,
            _ if milestone_attr(name).is_some() => {
                let value = child.attribute(milestone_attr(name).unwrap()).unwrap_or_default();
                r.milestone(name, value.to_string(), child.attribute("break") == Some("no"));
                walk(child, r, meta)?;
            }
            _ if wrapper_attr(name).is_some() || name == "span" => {
                let (layer, value) = match wrapper_attr(name) {
                    Some(attr) => (name, child.attribute(attr)),
                    None => (
                        child
                            .attribute("layer")
                            .ok_or_else(|| structure(child, "missing layer"))?,
                        child.attribute("value"),
                    ),
                };
                if milestone_attr(layer).is_some() {
                    return Err(structure(child, format!("{layer} is a milestone layer")));
                }
                if child.ancestors().skip(1).any(|a| wrapped_layer(a) == Some(layer)) {
                    return Err(structure(child, format!("nested inside another {layer} span")));
                }
                r.flush_piece();
                let start = r.next;
                walk(child, r, meta)?;
                r.flush_piece();
                r.add_span(layer, start, value.unwrap_or_default().to_string());
            }
            _ => walk(child, r, meta)?,
        }
    }
    Ok(())
}

fn wrapped_layer<'a>(node: roxmltree::Node<'a, '_>) -> Option<&'a str> {
    match node.tag_name().name() {
        "span" => node.attribute("layer"),
        name => WRAPPERS.iter().find(|(w, _)| *w == name).map(|(w, _)| *w),
    }
}

fn read_morph(node: roxmltree::Node<'_, '_>, r: &mut Reader) -> Result<(), XmlError> {
    if let Some(inner) = node.children().find(|c| c.is_element()) {
        return Err(structure(inner, "markup inside <m>"));
    }
    r.flush_piece();
    let orig: String = node.children().filter_map(|c| c.text()).collect();
    let surface = node.attribute("norm").unwrap_or(&orig).to_string();
    let index = r.next;
    r.push_morph(Morph::new(orig, surface));
    for attr in node.attributes() {
        if attr.name() == "norm" {
            continue;
        }
        r.tokens
            .entry(attr.name().to_string())
            .or_default()
            .insert(index, attr.value().to_string());
    }
    Ok(())
}

trait PushAny {
    fn push_any(&mut self, key: &str, value: &str) -> Result<(), ModelError>;
}

impl PushAny for DocMeta {
    /// Adds a key once, `urn` and `title` included.
    fn push_any(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        if self.get(key).is_some() {
            return Err(ModelError::DuplicateMetaKey(key.to_string()));
        }
        self.set(key, value)
    }
}

fn is_xml_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
}

fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

fn export_err(layer: &str, reason: impl Into<String>) -> XmlExportError {
    XmlExportError {
        layer: layer.to_string(),
        reason: reason.into(),
    }
}

fn check_chars(layer: &str, s: &str) -> Result<(), XmlExportError> {
    match s.chars().find(|c| !is_xml_char(*c)) {
        Some(c) => Err(export_err(
            layer,
            format!("character U+{:04X} is not allowed in XML", c as u32),
        )),
        None => Ok(()),
    }
}

fn is_xml_name(name: &str) -> bool {
    !name.to_ascii_lowercase().starts_with("xml") && !name.contains(':')
}

struct Plan<'a> {
    tokens: Vec<(&'a str, &'a [String])>,
    /// Milestone spans by start index.
    milestones: BTreeMap<usize, Vec<(&'a str, &'a str, &'a str)>>,
    wrappers: Vec<Wrapper<'a>>,
}

struct Wrapper<'a> {
    start: usize,
    end: usize,
    layer: &'a str,
    element: &'static str,
    open: String,
}

fn plan(doc: &Document) -> Result<Plan<'_>, XmlExportError> {
    let len = doc.morph_count();
    let mut p = Plan {
        tokens: Vec::new(),
        milestones: BTreeMap::new(),
        wrappers: Vec::new(),
    };
    for layer in doc.layers() {
        let name = layer.name();
        if !is_xml_name(name) {
            return Err(export_err(name, "not a usable attribute name"));
        }
        match (layer.values(), milestone_attr(name)) {
            (LayerValues::Token(_), _) if milestone_attr(name).is_some() || wrapper_attr(name).is_some() => {
                return Err(export_err(name, "element layers must be span layers"));
            }
            (LayerValues::Token(values), _) => {
                for v in values {
                    check_chars(name, v)?;
                }
                p.tokens.push((name, values));
            }
            (LayerValues::Span(spans), Some(attr)) => {
                for (i, s) in spans.iter().enumerate() {
                    check_chars(name, &s.value)?;
                    let end = spans.get(i + 1).map_or(len, |n| n.start);
                    if s.end + 1 != end {
                        return Err(export_err(
                            name,
                            format!("milestone span at {} does not reach the next milestone", s.start),
                        ));
                    }
                    p.milestones.entry(s.start).or_default().push((name, attr, &s.value));
                }
            }
            (LayerValues::Span(spans), None) => {
                for s in spans {
                    check_chars(name, &s.value)?;
                    let (element, open) = match wrapper_attr(name) {
                        Some(attr) => (
                            name_static(name),
                            format!("<{name} {attr}=\"{}\">", escape_attr(&s.value)),
                        ),
                        None => (
                            "span",
                            format!("<span layer=\"{name}\" value=\"{}\">", escape_attr(&s.value)),
                        ),
                    };
                    p.wrappers.push(Wrapper {
                        start: s.start,
                        end: s.end,
                        layer: name,
                        element,
                        open,
                    });
                }
            }
        }
    }
    for list in p.milestones.values_mut() {
        list.sort_by_key(|(n, _, _)| MILESTONES.iter().position(|(m, _)| m == n));
    }
    fn rank<'a>(w: &Wrapper<'a>) -> (usize, &'a str) {
        let fixed = WRAPPERS
            .iter()
            .position(|(n, _)| *n == w.layer)
            .unwrap_or(WRAPPERS.len());
        (fixed, w.layer)
    }
    // Outer before inner: earlier start, then later end, then fixed order.
    p.wrappers.sort_by(|a, b| {
        a.start
            .cmp(&b.start)
            .then(b.end.cmp(&a.end))
            .then(rank(a).cmp(&rank(b)))
    });
    for (i, a) in p.wrappers.iter().enumerate() {
        for b in &p.wrappers[i + 1..] {
            if b.start > a.end {
                break;
            }
            if b.end > a.end {
                return Err(export_err(
                    b.layer,
                    format!("span at {} crosses the {} span at {}", b.start, a.layer, a.start),
                ));
            }
        }
    }
    Ok(p)
}

fn name_static(name: &str) -> &'static str {
    WRAPPERS.iter().find(|(n, _)| *n == name).map_or("span", |(n, _)| *n)
}

fn plain_writable(g: &BoundGroup, tokens: &[(&str, &[String])]) -> bool {
    let m = &g.morphs[0];
    g.morphs.len() == 1
        && m.surface == m.orig
        && split_bound_groups(&m.orig) == [m.orig.as_str()]
        && tokens.iter().all(|(_, v)| v[m.index].is_empty())
}

/// Writes a document in the transcription dialect.
pub fn doc_to_xml(doc: &Document) -> Result<String, XmlExportError> {
    for (k, v) in doc.meta().entries() {
        check_chars(k, k)?;
        check_chars(k, v)?;
    }
    for m in doc.morphs() {
        check_chars("orig", &m.orig)?;
        check_chars("norm", &m.surface)?;
    }
    let p = plan(doc)?;

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<doc");
    let meta = doc.meta();
    if let Some(urn) = meta.urn() {
        let _ = write!(out, " urn=\"{}\"", escape_attr(urn.as_str()));
    }
    if let Some(title) = meta.title() {
        let _ = write!(out, " title=\"{}\"", escape_attr(title));
    }
    let names: Vec<String> = doc
        .layers()
        .map(|l| match l.kind() {
            LayerKind::Span if !is_span_element(l.name()) => format!("{}:span", l.name()),
            _ => l.name().to_string(),
        })
        .collect();
    if !names.is_empty() {
        let _ = write!(out, " layers=\"{}\"", names.join(" "));
    }
    out.push('>');
    for (k, v) in meta.pairs() {
        let _ = write!(
            out,
            "\n  <meta key=\"{}\" value=\"{}\"/>",
            escape_attr(k),
            escape_attr(v)
        );
    }

    let mut body = String::new();
    let mut open: Vec<usize> = Vec::new();
    let mut next_wrapper = 0;
    for (gi, g) in doc.groups().iter().enumerate() {
        let plain = plain_writable(g, &p.tokens);
        for m in &g.morphs {
            let i = m.index;
            let group_start = i == g.span.0;
            if group_start && gi > 0 {
                body.push(' ');
            }
            for (name, attr, value) in p.milestones.get(&i).into_iter().flatten() {
                let _ = write!(body, "<{name} {attr}=\"{}\"", escape_attr(value));
                if !group_start {
                    body.push_str(" break=\"no\"");
                }
                body.push_str("/>");
            }
            while next_wrapper < p.wrappers.len() && p.wrappers[next_wrapper].start == i {
                body.push_str(&p.wrappers[next_wrapper].open);
                open.push(next_wrapper);
                next_wrapper += 1;
            }
            if plain {
                body.push_str(&escape_text(&m.orig));
            } else {
                body.push_str("<m");
                if m.surface != m.orig {
                    let _ = write!(body, " norm=\"{}\"", escape_attr(&m.surface));
                }
                for (name, values) in &p.tokens {
                    if !values[i].is_empty() {
                        let _ = write!(body, " {name}=\"{}\"", escape_attr(&values[i]));
                    }
                }
                let _ = write!(body, ">{}</m>", escape_text(&m.orig));
            }
            while let Some(&w) = open.last() {
                if p.wrappers[w].end != i {
                    break;
                }
                let _ = write!(body, "</{}>", p.wrappers[w].element);
                open.pop();
            }
        }
    }
    if !body.is_empty() {
        out.push('\n');
        out.push_str(&body);
        out.push('\n');
    } else if !meta.pairs().is_empty() {
        out.push('\n');
    }
    out.push_str("</doc>\n");
    Ok(out)
}
