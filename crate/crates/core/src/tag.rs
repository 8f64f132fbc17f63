//! Part-of-speech, lemma, language-of-origin and multiword-expression
//! annotation from the lexicon.
//!
//! Tagging works on normalized morph forms. Forms with a single reading
//! take it; ambiguous forms go through a short list of contextual rules;
//! forms missing from the lexicon get `X`, their own surface as lemma, and
//! `unknown` origin.

use thiserror::Error;

use crate::lexicon::{LexEntry, Lexicon, Origin, Upos};
use crate::model::{Document, Layer, Span};
use crate::segment::is_punctuation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("layer {0:?} is required but missing")]
    MissingLayer(&'static str),
    #[error("layer {0:?} must be a token layer")]
    WrongKind(&'static str),
}

/// All four annotation layers for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagResult {
    pub pos: Layer,
    pub lemma: Layer,
    pub lang: Layer,
    pub mwe: Layer,
}

fn distinct_readings(entries: &[LexEntry]) -> Vec<Upos> {
    let mut out: Vec<Upos> = Vec::with_capacity(entries.len());
    for e in entries {
        if !out.contains(&e.upos) {
            out.push(e.upos);
        }
    }
    out
}

fn has_reading(lex: &Lexicon, form: Option<&str>, tags: &[Upos]) -> bool {
    form.is_some_and(|f| lex.lookup(f).iter().any(|e| tags.contains(&e.upos)))
}

/// UPOS per morph.
pub fn tag_pos(doc: &Document, lex: &Lexicon) -> Layer {
    let surfaces = doc.surfaces();
    let group_initial: Vec<bool> = doc
        .groups()
        .iter()
        .flat_map(|g| (0..g.morphs.len()).map(|i| i == 0))
        .collect();
    let tags = surfaces.iter().enumerate().map(|(i, form)| {
        let readings = distinct_readings(lex.lookup(form));
        let next = surfaces.get(i + 1).copied();
        let after_next = surfaces.get(i + 2).copied();
        let tag = match readings.as_slice() {
            [] if form.chars().all(is_punctuation) => Upos::Punct,
            [] => Upos::X,
            [only] => *only,
            _ if readings.contains(&Upos::Adp) && has_reading(lex, next, &[Upos::Det, Upos::Noun]) => Upos::Adp,
            _ if readings.contains(&Upos::Aux)
                && group_initial[i]
                && has_reading(lex, next, &[Upos::Pron])
                && has_reading(lex, after_next, &[Upos::Verb]) =>
            {
                Upos::Aux
            }
            _ => readings[0],
        };
        tag.as_str()
    });
    Layer::token("pos", tags).expect("static layer name")
}

fn pos_values(doc: &Document) -> Result<&[String], TagError> {
    doc.layer("pos")
        .ok_or(TagError::MissingLayer("pos"))?
        .token_values()
        .ok_or(TagError::WrongKind("pos"))
}

/// The lexicon entry matching a morph's form and chosen tag.
pub fn chosen_entry<'a>(lex: &'a Lexicon, form: &str, pos: &str) -> Option<&'a LexEntry> {
    lex.lookup(form).iter().find(|e| e.upos.as_str() == pos)
}

pub fn lemmatize(doc: &Document, lex: &Lexicon) -> Result<Layer, TagError> {
    let pos = pos_values(doc)?;
    let lemmas = doc.morphs().zip(pos).map(|(m, p)| {
        chosen_entry(lex, &m.surface, p)
            .map(|e| e.lemma.clone())
            .unwrap_or_else(|| m.surface.clone())
    });
    Ok(Layer::token("lemma", lemmas).expect("static layer name"))
}

pub fn tag_lang(doc: &Document, lex: &Lexicon) -> Result<Layer, TagError> {
    let pos = pos_values(doc)?;
    let langs = doc.morphs().zip(pos).map(|(m, p)| {
        chosen_entry(lex, &m.surface, p)
            .map_or(Origin::Unknown, |e| e.origin)
            .as_str()
    });
    Ok(Layer::token("lang", langs).expect("static layer name"))
}

/// Greedy leftmost-longest matching of lexicon MWEs over normalized morphs.
pub fn find_mwes(doc: &Document, lex: &Lexicon) -> Layer {
    let surfaces = doc.surfaces();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < surfaces.len() {
        let best = lex
            .mwes()
            .iter()
            .filter(|m| m.forms.len() <= surfaces.len() - i && m.forms.iter().zip(&surfaces[i..]).all(|(f, s)| f == s))
            .fold(None::<&crate::lexicon::Mwe>, |best, m| match best {
                Some(b) if b.forms.len() >= m.forms.len() => Some(b),
                _ => Some(m),
            });
        match best {
            Some(m) => {
                spans.push(Span::new(i, i + m.forms.len() - 1, m.lemma.clone()));
                i += m.forms.len();
            }
            None => i += 1,
        }
    }
    Layer::span("mwe", spans).expect("greedy matches never overlap")
}

pub fn tag(doc: &Document, lex: &Lexicon) -> TagResult {
    let pos = tag_pos(doc, lex);
    let with_pos = doc.replace_layer(pos.clone()).expect("arity matches");
    TagResult {
        lemma: lemmatize(&with_pos, lex).expect("pos attached"),
        lang: tag_lang(&with_pos, lex).expect("pos attached"),
        mwe: find_mwes(doc, lex),
        pos,
    }
}
