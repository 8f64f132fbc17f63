//! Conversion among the working formats and project validation.
//!
//! Every format carries the full document: transcription XML for
//! diplomatic editing, the token grid for annotation, JSON interchange for
//! tools, and CoNLL-U for parsed output.

mod grid;
mod interchange;
mod schema;
mod xml;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use grid::{canonicalize_grid, doc_to_grid, escape_cell, grid_to_doc, unescape_cell, GridError, LayerKinds};
pub use interchange::{doc_to_interchange, interchange_to_doc, InterchangeError};
pub use schema::{
    validate, validate_document, validate_grid, validate_xml, Artifact, ElementRule, LayerRule, Locator, SchemaError,
    ValidationSchema, Violation,
};
pub use xml::{doc_to_xml, xml_to_doc, xml_to_doc_strict, XmlError, XmlExportError, ELEMENTS, MILESTONES, WRAPPERS};

use crate::model::{Document, LayerKind};
use crate::treebank::{
    document_to_sentences, read_conllu, sentences_to_document, write_conllu, ConlluError, SentencePolicy, TreebankError,
};

/// Span layers a grid is read with when nothing else is declared.
pub const KNOWN_SPAN_LAYERS: [&str; 10] = [
    "cb",
    "entity",
    "gap",
    "hi",
    "lb",
    "mwe",
    "note",
    "pb",
    "sentence",
    "translation",
];

impl LayerKinds {
    /// The built-in span layers; anything else reads as a token layer.
    pub fn known() -> Self {
        LayerKinds::spans(KNOWN_SPAN_LAYERS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Xml,
    Grid,
    Conllu,
    Interchange,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Xml, Format::Grid, Format::Conllu, Format::Interchange];

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Xml => "xml",
            Format::Grid => "grid",
            Format::Conllu => "conllu",
            Format::Interchange => "interchange",
        }
    }

    pub fn media_type(self) -> &'static str {
        match self {
            Format::Xml => "application/xml; charset=utf-8",
            Format::Grid => "text/tab-separated-values; charset=utf-8",
            Format::Conllu => "text/plain; charset=utf-8",
            Format::Interchange => "application/json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown format {0:?}; expected xml, grid, conllu or interchange")]
pub struct UnknownFormat(pub String);

impl FromStr for Format {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Format::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| UnknownFormat(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error(transparent)]
    XmlExport(#[from] XmlExportError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Interchange(#[from] InterchangeError),
    #[error(transparent)]
    Conllu(#[from] ConlluError),
    #[error(transparent)]
    Treebank(#[from] TreebankError),
}

/// Serializes a document. CoNLL-U needs `head` and `deprel` layers.
pub fn render(doc: &Document, format: Format) -> Result<String, FormatError> {
    Ok(match format {
        Format::Xml => doc_to_xml(doc)?,
        Format::Grid => doc_to_grid(doc),
        Format::Interchange => doc_to_interchange(doc),
        Format::Conllu => {
            if doc.is_empty() {
                String::new()
            } else {
                write_conllu(&document_to_sentences(doc, &SentencePolicy::default())?)
            }
        }
    })
}

/// Reads a document. `kinds` only matters for grids.
pub fn parse(text: &str, format: Format, kinds: &LayerKinds) -> Result<Document, FormatError> {
    Ok(match format {
        Format::Xml => xml_to_doc(text)?,
        Format::Grid => grid_to_doc(&text.replace("\r\n", "\n"), kinds)?,
        Format::Interchange => interchange_to_doc(text)?,
        Format::Conllu => sentences_to_document(&read_conllu(text)?)?,
    })
}

/// The kind a grid column gets under `kinds`, falling back to token.
pub fn kind_of(kinds: &LayerKinds, name: &str) -> LayerKind {
    kinds.kinds.get(name).copied().unwrap_or(LayerKind::Token)
}
