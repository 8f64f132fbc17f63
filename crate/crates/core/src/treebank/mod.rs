//! Dependency trees and their CoNLL-U form.
//!
//! Bound groups become multiword-token ranges (`1-3  ⲁϥⲥⲱⲧⲙ ...`) over the
//! syntactic words they contain, which is how Universal Dependencies
//! treebanks represent fused orthographic words.

mod conllu;
mod deps;
mod document;
mod validate;

pub use conllu::{read_conllu, write_conllu, ConlluError};
pub use deps::{assign_deps, DepError, Word, OBJECT_MARKERS};
pub use document::{
    document_to_sentences, parse_document, sentence_ranges, sentences_to_document, SentencePolicy, TreebankError,
};
pub use validate::{validate_tree, TreeViolation};

/// One syntactic word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DepNode {
    /// 1-based position in the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// Governor id; 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    /// MISC items, usually `Key=Value`.
    pub misc: Vec<String>,
}

impl DepNode {
    pub fn new(
        id: usize,
        form: impl Into<String>,
        lemma: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        DepNode {
            id,
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            xpos: "_".into(),
            feats: "_".into(),
            head,
            deprel: deprel.into(),
            deps: "_".into(),
            misc: Vec::new(),
        }
    }

    /// Value of a `Key=Value` MISC item.
    pub fn misc_value(&self, key: &str) -> Option<&str> {
        self.misc
            .iter()
            .find_map(|item| item.strip_prefix(key)?.strip_prefix('='))
    }
}

/// A multiword-token range: one orthographic word spanning several nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiwordToken {
    pub first: usize,
    pub last: usize,
    pub form: String,
    pub misc: Vec<String>,
}

impl MultiwordToken {
    pub fn new(first: usize, last: usize, form: impl Into<String>) -> Self {
        MultiwordToken {
            first,
            last,
            form: form.into(),
            misc: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Sentence {
    /// Comment lines without the leading `# `.
    pub comments: Vec<String>,
    pub nodes: Vec<DepNode>,
    pub mwt: Vec<MultiwordToken>,
}

impl Sentence {
    pub fn heads(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.head).collect()
    }

    pub fn deprels(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.deprel.as_str()).collect()
    }

    pub fn root(&self) -> Option<&DepNode> {
        self.nodes.iter().find(|n| n.head == 0)
    }

    /// Value of a `key = value` comment.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }
}
