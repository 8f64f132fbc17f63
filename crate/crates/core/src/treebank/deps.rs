use thiserror::Error;

use super::{DepNode, Sentence};
use crate::segment::is_punctuation;

/// Adpositions that mark a direct object.
pub const OBJECT_MARKERS: [&str; 2] = ["ⲛ", "ⲙ"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DepError {
    #[error("cannot build a tree for an empty sentence")]
    EmptySentence,
}

/// A tagged word awaiting attachment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Word {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub misc: Vec<String>,
}

impl Word {
    pub fn new(form: impl Into<String>, lemma: impl Into<String>, upos: impl Into<String>) -> Self {
        Word {
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            misc: Vec::new(),
        }
    }

    fn is_punct(&self) -> bool {
        self.upos == "PUNCT" || (!self.form.is_empty() && self.form.chars().all(is_punctuation))
    }

    fn is_noun(&self) -> bool {
        matches!(self.upos.as_str(), "NOUN" | "PROPN")
    }
}

/// Attaches every word with a fixed, ordered rule set:
///
/// 1. the first `VERB` is the root, or else the first non-punctuation word;
/// 2. an `AUX` followed (through any `PRON`s) by a `VERB` is its `aux`, and
///    those pronouns are its `nsubj`;
/// 3. a `DET` directly before a noun is its `det`;
/// 4. an `ADP` before a noun, optionally through one `DET`, is its `case`;
///    that noun becomes `obj` of the nearest preceding verb when the
///    adposition is an object marker, `obl` otherwise;
/// 5. punctuation attaches to the root as `punct`;
/// 6. anything left is `dep` of the root.
///
/// Rules never override an earlier attachment, and every attachment points
/// at a verb, a noun or the root, so the result is always a tree.
pub fn assign_deps(words: &[Word]) -> Result<Sentence, DepError> {
    if words.is_empty() {
        return Err(DepError::EmptySentence);
    }
    let n = words.len();
    let upos = |i: usize| words[i].upos.as_str();
    let mut att: Vec<Option<(usize, &'static str)>> = vec![None; n];

    let root = (0..n)
        .find(|&i| upos(i) == "VERB")
        .or_else(|| (0..n).find(|&i| !words[i].is_punct()))
        .unwrap_or(0);
    att[root] = Some((usize::MAX, "root"));

    let attach = |att: &mut Vec<Option<(usize, &'static str)>>, dep: usize, head: usize, rel| {
        if att[dep].is_none() && dep != head {
            att[dep] = Some((head, rel));
        }
    };

    for i in 0..n {
        if upos(i) != "AUX" {
            continue;
        }
        let mut j = i + 1;
        while j < n && upos(j) == "PRON" {
            j += 1;
        }
        if j < n && upos(j) == "VERB" {
            attach(&mut att, i, j, "aux");
            for k in i + 1..j {
                attach(&mut att, k, j, "nsubj");
            }
        }
    }

    for i in 0..n.saturating_sub(1) {
        if upos(i) == "DET" && words[i + 1].is_noun() {
            attach(&mut att, i, i + 1, "det");
        }
    }

    for i in 0..n {
        if upos(i) != "ADP" {
            continue;
        }
        let noun = if i + 1 < n && words[i + 1].is_noun() {
            Some(i + 1)
        } else if i + 2 < n && upos(i + 1) == "DET" && words[i + 2].is_noun() {
            Some(i + 2)
        } else {
            None
        };
        let Some(noun) = noun else { continue };
        attach(&mut att, i, noun, "case");
        if let Some(verb) = (0..i).rev().find(|&v| upos(v) == "VERB") {
            let rel = if OBJECT_MARKERS.contains(&words[i].form.as_str()) {
                "obj"
            } else {
                "obl"
            };
            attach(&mut att, noun, verb, rel);
        }
    }

    for (i, w) in words.iter().enumerate() {
        if w.is_punct() {
            attach(&mut att, i, root, "punct");
        }
    }
    for i in 0..n {
        attach(&mut att, i, root, "dep");
    }

    let nodes = words
        .iter()
        .zip(att)
        .enumerate()
        .map(|(i, (w, a))| {
            let (head, rel) = a.expect("every word attached");
            let head = if head == usize::MAX { 0 } else { head + 1 };
            let mut node = DepNode::new(i + 1, &w.form, &w.lemma, &w.upos, head, rel);
            node.misc = w.misc.clone();
            node
        })
        .collect();
    Ok(Sentence {
        nodes,
        ..Sentence::default()
    })
}
