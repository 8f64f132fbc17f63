//! Random inputs and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use coptic_core::model::{BoundGroup, DocMeta, Document, Layer, Morph, Span};
use coptic_core::treebank::{assign_deps, Word};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The fixture lexicon's forms, in file order, read straight from the TSV.
pub fn fixture_forms() -> Vec<String> {
    include_str!("../../data/fixture.lex.tsv")
        .lines()
        .skip(1)
        .filter_map(|l| l.split('\t').next())
        .map(String::from)
        .collect()
}

/// `(form, upos, lemma, origin)` rows of the fixture lexicon.
pub fn fixture_rows() -> Vec<[String; 4]> {
    include_str!("../../data/fixture.lex.tsv")
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            [c[0].into(), c[1].into(), c[2].into(), c[3].into()]
        })
        .collect()
}

/// Every way to write `s` as a sequence of `forms`, by exhaustive search.
pub fn all_covers(s: &str, forms: &[String]) -> Vec<Vec<String>> {
    if s.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for f in forms {
        if let Some(rest) = s.strip_prefix(f.as_str()) {
            for mut tail in all_covers(rest, forms) {
                tail.insert(0, f.clone());
                out.push(tail);
            }
        }
    }
    out
}

/// The best cover under the ranking: fewest pieces, then longest pieces
/// from the left, then earliest forms in lexicon order.
pub fn oracle_cover(s: &str, forms: &[String]) -> Option<Vec<String>> {
    let rank = |c: &Vec<String>| {
        let lens: Vec<std::cmp::Reverse<usize>> = c.iter().map(|p| std::cmp::Reverse(p.chars().count())).collect();
        let order: Vec<usize> = c.iter().map(|p| forms.iter().position(|f| f == p).unwrap()).collect();
        (c.len(), lens, order)
    };
    all_covers(s, forms).into_iter().min_by_key(rank)
}

/// Lowercase Coptic letters, including the Demotic-derived ones.
pub fn coptic_letters() -> Vec<char> {
    let mut v: Vec<char> = (0x2C81..=0x2CB1).step_by(2).filter_map(char::from_u32).collect();
    v.extend((0x03E3..=0x03EF).step_by(2).filter_map(char::from_u32));
    v
}

pub fn coptic_capitals() -> Vec<char> {
    coptic_letters()
        .into_iter()
        .map(|c| char::from_u32(c as u32 - 1).unwrap())
        .collect()
}

pub const STRIP_MARKS: [char; 4] = ['\u{0305}', '\u{0304}', '\u{0302}', '\u{0300}'];
/// Combining marks the default configuration keeps.
pub const KEPT_MARKS: [char; 3] = ['\u{0301}', '\u{0308}', '\u{0323}'];

pub fn coptic_word(rng: &mut impl Rng, max: usize) -> String {
    let letters = coptic_letters();
    let n = rng.random_range(1..=max);
    (0..n).map(|_| *letters.choose(rng).unwrap()).collect()
}

/// Coptic text with capitals, marks, precomposed Latin/Greek letters,
/// punctuation and uneven whitespace.
pub fn messy_text(rng: &mut impl Rng) -> String {
    let letters = coptic_letters();
    let capitals = coptic_capitals();
    let precomposed = ['é', 'ë', 'ά', 'ῆ', 'Ḗ', 'ṓ'];
    let punct = ['·', '.', ',', ':', '⳾', '⳿'];
    let ws = [" ", "  ", "\t", "\n", " \u{00A0}"];
    let n = rng.random_range(0..24);
    let mut s = String::new();
    for _ in 0..n {
        match rng.random_range(0..20) {
            0..=9 => s.push(*letters.choose(rng).unwrap()),
            10..=11 => s.push(*capitals.choose(rng).unwrap()),
            12..=13 => s.push(*STRIP_MARKS.choose(rng).unwrap()),
            14 => s.push(*KEPT_MARKS.choose(rng).unwrap()),
            15 => s.push(*precomposed.choose(rng).unwrap()),
            16 => s.push(*punct.choose(rng).unwrap()),
            _ => s.push_str(ws.choose(rng).unwrap()),
        }
    }
    s
}

/// Text drawn from a pool that exercises escaping in every format.
pub fn awkward_value(rng: &mut impl Rng, allow_empty: bool) -> String {
    let pool = [
        "ⲁ",
        "ϥ",
        "ⲥⲱⲧⲙ",
        " ",
        "\t",
        "\n",
        "\r",
        "<",
        ">",
        "&",
        "\"",
        "'",
        "_",
        "\\",
        "\\_",
        "é",
        "B-",
        "I",
        "O",
        "#",
        "%",
        "=",
    ];
    let lo = usize::from(!allow_empty);
    let n = rng.random_range(lo..4);
    (0..n).map(|_| *pool.choose(rng).unwrap()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Anything the model accepts.
    Any,
    /// What the XML dialect can express: group text without whitespace or
    /// punctuation, tiling milestones and properly nested wrappers.
    Xml,
}

fn random_meta(rng: &mut impl Rng) -> DocMeta {
    let mut meta = DocMeta::new();
    if rng.random_bool(0.5) {
        let work = coptic_word(rng, 3);
        meta = meta.with_urn(&format!("urn:cts:copticLit:shenoute.{work}")).unwrap();
    }
    if rng.random_bool(0.5) {
        meta = meta.with_title(awkward_value(rng, true));
    }
    let mut keys = ["author", "language", "annotators", "msName", "version", "note_1", "ϣⲁ"];
    keys.shuffle(rng);
    for k in &keys[..rng.random_range(0..4)] {
        meta.push(k, awkward_value(rng, true)).unwrap();
    }
    meta
}

fn random_groups(rng: &mut impl Rng, shape: Shape) -> Vec<BoundGroup> {
    let mut groups = Vec::new();
    let mut next = 0;
    for _ in 0..rng.random_range(0..7) {
        let morphs: Vec<Morph> = if rng.random_bool(0.1) {
            vec![Morph::plain(if rng.random_bool(0.5) { "·" } else { "." })]
        } else {
            (0..rng.random_range(1..4))
                .map(|_| {
                    let orig = match shape {
                        Shape::Xml => {
                            let mut w = coptic_word(rng, 4);
                            if rng.random_bool(0.2) {
                                w.push('\u{0305}');
                            }
                            w
                        }
                        Shape::Any if rng.random_bool(0.2) => awkward_value(rng, true),
                        Shape::Any => coptic_word(rng, 4),
                    };
                    let surface = if rng.random_bool(0.3) {
                        coptic_word(rng, 4)
                    } else if orig.is_empty() {
                        "ⲉ".to_string()
                    } else {
                        orig.clone()
                    };
                    Morph::new(orig, surface)
                })
                .collect()
        };
        let n = morphs.len();
        groups.push(BoundGroup::from_morphs(next, morphs));
        next += n;
    }
    groups
}

/// Disjoint spans over `[lo, hi]`, at most `max` of them.
fn disjoint_spans(rng: &mut impl Rng, lo: usize, hi: usize, max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut at = lo;
    while at <= hi && out.len() < max {
        let start = rng.random_range(at..=hi);
        let end = rng.random_range(start..=hi.min(start + 3));
        out.push((start, end));
        at = end + 1 + rng.random_range(0..2);
    }
    out
}

/// Spans that tile `[start, n)`.
fn tiling(rng: &mut impl Rng, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut at = rng.random_range(0..n);
    while at < n {
        let end = rng.random_range(at..n.min(at + 4));
        out.push((at, end));
        at = end + 1;
    }
    out
}

/// A laminar family: spans at one depth are disjoint, and each nests inside
/// a span of the depth above.
fn laminar(rng: &mut impl Rng, lo: usize, hi: usize, depth: usize, out: &mut Vec<Vec<(usize, usize)>>) {
    if depth >= out.len() {
        return;
    }
    for (a, b) in disjoint_spans(rng, lo, hi, 3) {
        out[depth].push((a, b));
        laminar(rng, a, b, depth + 1, out);
    }
}

pub fn random_document(rng: &mut impl Rng, shape: Shape) -> Document {
    let meta = random_meta(rng);
    let mut doc = Document::new(meta, random_groups(rng, shape)).unwrap();
    let n = doc.morph_count();

    let mut token_names = ["pos", "lemma", "lang", "gloss", "x1"];
    token_names.shuffle(rng);
    for name in &token_names[..rng.random_range(0..3)] {
        let values: Vec<String> = (0..n).map(|_| awkward_value(rng, true)).collect();
        doc = doc.attach_layer(Layer::token(*name, values).unwrap()).unwrap();
    }

    match shape {
        Shape::Any => {
            let mut names = ["pb", "hi", "entity", "mwe", "translation"];
            names.shuffle(rng);
            for name in &names[..rng.random_range(0..3)] {
                let spans = if n == 0 {
                    vec![]
                } else {
                    disjoint_spans(rng, 0, n - 1, 4)
                };
                let spans = spans
                    .into_iter()
                    .map(|(a, b)| Span::new(a, b, awkward_value(rng, true)))
                    .collect();
                doc = doc.attach_layer(Layer::span(*name, spans).unwrap()).unwrap();
            }
        }
        Shape::Xml => {
            let mut milestones = ["pb", "cb", "lb"];
            milestones.shuffle(rng);
            for name in &milestones[..rng.random_range(0..3)] {
                let spans = if n == 0 { vec![] } else { tiling(rng, n) };
                let spans = spans
                    .into_iter()
                    .map(|(a, b)| Span::new(a, b, awkward_value(rng, true)))
                    .collect();
                doc = doc.attach_layer(Layer::span(*name, spans).unwrap()).unwrap();
            }
            let mut wrappers = ["hi", "gap", "note", "mwe", "entity"];
            wrappers.shuffle(rng);
            let depth = rng.random_range(0..4);
            let mut levels = vec![Vec::new(); depth];
            if n > 0 {
                laminar(rng, 0, n - 1, 0, &mut levels);
            }
            for (name, spans) in wrappers.iter().zip(levels) {
                let spans = spans
                    .into_iter()
                    .map(|(a, b)| Span::new(a, b, awkward_value(rng, true)))
                    .collect();
                doc = doc.attach_layer(Layer::span(*name, spans).unwrap()).unwrap();
            }
        }
    }
    doc
}

pub const UPOS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN", "PUNCT", "SCONJ",
    "SYM", "VERB", "X",
];

/// Words with random part-of-speech tags, biased towards the tags the
/// attachment rules look at.
pub fn random_words(rng: &mut impl Rng, max: usize) -> Vec<Word> {
    let common = ["AUX", "PRON", "VERB", "DET", "NOUN", "ADP", "PROPN", "PUNCT"];
    let n = rng.random_range(1..=max);
    (0..n)
        .map(|_| {
            let upos = if rng.random_bool(0.7) {
                *common.choose(rng).unwrap()
            } else {
                *UPOS.choose(rng).unwrap()
            };
            let form = match upos {
                "PUNCT" => "·".to_string(),
                "ADP" if rng.random_bool(0.5) => "ⲛ".to_string(),
                _ => coptic_word(rng, 4),
            };
            Word::new(form.clone(), form, upos)
        })
        .collect()
}

/// A well-formed sentence with random multiword tokens, comments and MISC.
pub fn random_sentence(rng: &mut impl Rng) -> coptic_core::treebank::Sentence {
    let words = random_words(rng, 12);
    let mut s = assign_deps(&words).unwrap();
    let n = s.nodes.len();
    let mut at = 1;
    while at < n {
        let first = rng.random_range(at..=n);
        if first >= n {
            break;
        }
        let last = rng.random_range(first + 1..=n.min(first + 3));
        let form: String = s.nodes[first - 1..last].iter().map(|x| x.form.as_str()).collect();
        let mut mwt = coptic_core::treebank::MultiwordToken::new(first, last, form);
        if rng.random_bool(0.2) {
            mwt.misc.push("SpaceAfter=No".into());
        }
        s.mwt.push(mwt);
        at = last + 1;
    }
    for node in &mut s.nodes {
        if rng.random_bool(0.2) {
            node.misc.push(format!("Orig={}", coptic_word(rng, 3)));
        }
        if rng.random_bool(0.1) {
            node.misc.push("Lang=grc".into());
        }
    }
    s.comments.push(format!("sent_id = {}", rng.random_range(1..1000)));
    if rng.random_bool(0.5) {
        let text: Vec<&str> = s.nodes.iter().map(|x| x.form.as_str()).collect();
        s.comments.push(format!("text = {}", text.join(" ")));
    }
    s
}
