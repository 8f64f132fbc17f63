use thiserror::Error;

use super::{assign_deps, DepError, DepNode, MultiwordToken, Sentence, Word};
use crate::model::{BoundGroup, DocMeta, Document, Layer, ModelError, Morph, Span};
use crate::segment::SENTENCE_FINAL;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreebankError {
    #[error("layer {0:?} is required but missing")]
    MissingLayer(&'static str),
    #[error("morph {index}: head {value:?} is not a sentence-local id")]
    InvalidHead { index: usize, value: String },
    #[error("sentence {sentence}: word {id} is not covered consistently by multiword tokens")]
    BadRange { sentence: usize, id: usize },
    #[error(transparent)]
    Dep(#[from] DepError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Where sentences end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePolicy {
    /// A group made only of these characters closes its sentence.
    pub final_punct: Vec<char>,
    /// Span layers whose span ends also close a sentence.
    pub boundary_layers: Vec<String>,
}

impl Default for SentencePolicy {
    fn default() -> Self {
        SentencePolicy {
            final_punct: SENTENCE_FINAL.to_vec(),
            boundary_layers: vec!["sentence".into(), "translation".into()],
        }
    }
}

/// Sentences as inclusive group-index ranges. Sentences never split a
/// bound group.
pub fn sentence_ranges(doc: &Document, policy: &SentencePolicy) -> Vec<(usize, usize)> {
    let groups = doc.groups();
    let span_ends: Vec<usize> = policy
        .boundary_layers
        .iter()
        .filter_map(|name| doc.layer(name)?.spans())
        .flatten()
        .map(|s| s.end)
        .collect();
    let mut out = Vec::new();
    let mut start = 0;
    for (gi, g) in groups.iter().enumerate() {
        let surface = g.surface();
        let is_final = !surface.is_empty() && surface.chars().all(|c| policy.final_punct.contains(&c));
        let span_end = span_ends.iter().any(|&e| g.span.0 <= e && e <= g.span.1);
        if is_final || span_end || gi + 1 == groups.len() {
            out.push((start, gi));
            start = gi + 1;
        }
    }
    out
}

fn token_layer<'a>(doc: &'a Document, name: &'static str) -> Option<&'a [String]> {
    doc.layer(name).and_then(Layer::token_values)
}

/// Runs [`assign_deps`] per sentence and attaches `head` (sentence-local
/// ids) and `deprel` token layers.
pub fn parse_document(doc: &Document, policy: &SentencePolicy) -> Result<Document, TreebankError> {
    let pos = token_layer(doc, "pos").ok_or(TreebankError::MissingLayer("pos"))?;
    let lemma = token_layer(doc, "lemma");
    let morphs: Vec<&Morph> = doc.morphs().collect();
    let mut heads = Vec::with_capacity(morphs.len());
    let mut rels = Vec::with_capacity(morphs.len());
    for (g0, g1) in sentence_ranges(doc, policy) {
        let (first, last) = (doc.groups()[g0].span.0, doc.groups()[g1].span.1);
        let words: Vec<Word> = (first..=last)
            .map(|i| Word::new(&morphs[i].surface, lemma.map_or("", |l| l[i].as_str()), &pos[i]))
            .collect();
        let s = assign_deps(&words)?;
        for n in s.nodes {
            heads.push(n.head.to_string());
            rels.push(n.deprel);
        }
    }
    Ok(doc
        .replace_layer(Layer::token("head", heads)?)?
        .replace_layer(Layer::token("deprel", rels)?)?)
}

/// Builds CoNLL-U sentences from a parsed document.
///
/// Multi-morph groups become range lines. MISC carries `Lang=` for
/// non-Egyptian origins, `MweLemma=` inside multiword expressions and
/// `Orig=` where the transcription differs from the normalized form.
pub fn document_to_sentences(doc: &Document, policy: &SentencePolicy) -> Result<Vec<Sentence>, TreebankError> {
    let heads = token_layer(doc, "head").ok_or(TreebankError::MissingLayer("head"))?;
    let rels = token_layer(doc, "deprel").ok_or(TreebankError::MissingLayer("deprel"))?;
    let pos = token_layer(doc, "pos");
    let lemma = token_layer(doc, "lemma");
    let lang = token_layer(doc, "lang");
    let mwe = doc.layer("mwe").filter(|l| l.spans().is_some());
    let sent_layer = doc.layer("sentence").filter(|l| l.spans().is_some());

    let mut out = Vec::new();
    for (k, (g0, g1)) in sentence_ranges(doc, policy).into_iter().enumerate() {
        let groups = &doc.groups()[g0..=g1];
        let base = groups[0].span.0;
        let mut s = Sentence::default();
        if k == 0 {
            if let Some(urn) = doc.meta().urn() {
                s.comments.push(format!("newdoc id = {urn}"));
            }
        }
        let sent_id = sent_layer
            .and_then(|l| l.value_at(base))
            .map_or_else(|| (k + 1).to_string(), str::to_string);
        s.comments.push(format!("sent_id = {sent_id}"));
        let text: Vec<&str> = groups.iter().map(|g| g.orig.as_str()).collect();
        s.comments.push(format!("text = {}", text.join(" ")));
        for g in groups {
            if g.morphs.len() > 1 {
                s.mwt.push(MultiwordToken::new(
                    g.span.0 - base + 1,
                    g.span.1 - base + 1,
                    g.surface(),
                ));
            }
            for m in &g.morphs {
                let i = m.index;
                let head = heads[i].parse::<usize>().map_err(|_| TreebankError::InvalidHead {
                    index: i,
                    value: heads[i].clone(),
                })?;
                let mut node = DepNode::new(
                    i - base + 1,
                    &m.surface,
                    lemma.map_or("", |l| l[i].as_str()),
                    pos.map_or("", |p| p[i].as_str()),
                    head,
                    &rels[i],
                );
                if let Some(l) = lang.map(|l| l[i].as_str()).filter(|l| !l.is_empty() && *l != "egy") {
                    node.misc.push(format!("Lang={l}"));
                }
                if let Some(span) = mwe.and_then(|l| l.span_at(i)) {
                    node.misc.push(format!("MweLemma={}", span.value));
                }
                if m.orig != m.surface {
                    node.misc.push(format!("Orig={}", m.orig));
                }
                s.nodes.push(node);
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// Rebuilds a document from CoNLL-U sentences: range lines become bound
/// groups, and `pos`, `lemma`, `head`, `deprel`, `lang`, `mwe` and
/// `sentence` layers are restored.
pub fn sentences_to_document(sentences: &[Sentence]) -> Result<Document, TreebankError> {
    let mut meta = DocMeta::new();
    let mut groups = Vec::new();
    let (mut pos, mut lemma, mut head, mut rel, mut lang) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut any_lang = false;
    let mut mwe_spans: Vec<Span> = Vec::new();
    let mut sent_spans = Vec::new();
    let mut next = 0;
    for (si, s) in sentences.iter().enumerate() {
        if si == 0 {
            if let Some(urn) = s.comment_value("newdoc id") {
                if let Ok(m) = meta.clone().with_urn(urn) {
                    meta = m;
                }
            }
        }
        let sent_start = next;
        let mut id = 1;
        while id <= s.nodes.len() {
            let last = match s.mwt.iter().find(|m| m.first == id) {
                Some(m) if m.last <= s.nodes.len() => m.last,
                Some(_) => return Err(TreebankError::BadRange { sentence: si + 1, id }),
                None => id,
            };
            let morphs = s.nodes[id - 1..last]
                .iter()
                .map(|n| {
                    let surface = if n.form == "_" { "" } else { n.form.as_str() };
                    Morph::new(n.misc_value("Orig").unwrap_or(surface), surface)
                })
                .collect::<Vec<_>>();
            for (offset, n) in s.nodes[id - 1..last].iter().enumerate() {
                let i = next + offset;
                pos.push(undash(&n.upos));
                lemma.push(undash(&n.lemma));
                head.push(n.head.to_string());
                rel.push(undash(&n.deprel));
                match n.misc_value("Lang") {
                    Some(l) => {
                        any_lang = true;
                        lang.push(l.to_string());
                    }
                    None => lang.push("egy".to_string()),
                }
                if let Some(v) = n.misc_value("MweLemma") {
                    match mwe_spans.last_mut() {
                        Some(sp) if sp.end + 1 == i && sp.value == v => sp.end = i,
                        _ => mwe_spans.push(Span::new(i, i, v)),
                    }
                }
            }
            let n = morphs.len();
            groups.push(BoundGroup::from_morphs(next, morphs));
            next += n;
            id = last + 1;
        }
        if next > sent_start {
            let sid = s
                .comment_value("sent_id")
                .map_or_else(|| (si + 1).to_string(), str::to_string);
            sent_spans.push(Span::new(sent_start, next - 1, sid));
        }
    }
    let mut doc = Document::new(meta, groups)?;
    doc = doc.attach_layer(Layer::token("pos", pos)?)?;
    doc = doc.attach_layer(Layer::token("lemma", lemma)?)?;
    doc = doc.attach_layer(Layer::token("head", head)?)?;
    doc = doc.attach_layer(Layer::token("deprel", rel)?)?;
    if any_lang {
        doc = doc.attach_layer(Layer::token("lang", lang)?)?;
    }
    if !mwe_spans.is_empty() {
        doc = doc.attach_layer(Layer::span("mwe", mwe_spans)?)?;
    }
    doc = doc.attach_layer(Layer::span("sentence", sent_spans)?)?;
    Ok(doc)
}

fn undash(s: &str) -> String {
    if s == "_" {
        String::new()
    } else {
        s.to_string()
    }
}
