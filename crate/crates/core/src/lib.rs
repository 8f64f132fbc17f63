//! Annotation pipeline and corpus tooling for Sahidic Coptic.
//!
//! Raw text goes through [`normalize`], [`segment`], [`tag`] and
//! [`treebank`] to become a multilayer [`model::Document`]. Documents move
//! between XML, a tab-separated grid, JSON and CoNLL-U through [`formats`],
//! are versioned by [`store`] and edited concurrently through [`collab`].
//! [`pipeline`] strings the stages together.
//!
//! ```
//! use coptic_core::formats::Format;
//! use coptic_core::pipeline::{run_pipeline, LexiconRegistry, PipelineConfig};
//!
//! let grid = run_pipeline(
//!     "ⲁϥⲥⲱⲧⲙ",
//!     &PipelineConfig::all(Format::Grid),
//!     &LexiconRegistry::with_fixture(),
//! )
//! .unwrap();
//! assert!(grid.starts_with("orig\tnorm\tdeprel\tgroup\thead\t"));
//! ```

pub mod collab;
pub mod formats;
pub mod lexicon;
pub mod model;
pub mod normalize;
pub mod pipeline;
pub mod segment;
pub mod store;
pub mod tag;
pub mod treebank;

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/documents.md")]
    mod documents {}
    #[doc = include_str!("../../../book/src/normalization.md")]
    mod normalization {}
    #[doc = include_str!("../../../book/src/segmentation.md")]
    mod segmentation {}
    #[doc = include_str!("../../../book/src/tagging.md")]
    mod tagging {}
    #[doc = include_str!("../../../book/src/treebank.md")]
    mod treebank {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/store.md")]
    mod store {}
    #[doc = include_str!("../../../book/src/collaboration.md")]
    mod collaboration {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
}
