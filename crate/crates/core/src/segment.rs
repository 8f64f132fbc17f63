//! Bound-group splitting and lexicon-driven morph segmentation.
//!
//! A group is covered by lexicon forms using a dynamic program over
//! character positions. Covers are ranked by morph count (fewer first),
//! then by morph lengths read left to right (longer first). Groups with no
//! full cover come back as a single unresolved morph.

use crate::lexicon::Lexicon;
use crate::model::{BoundGroup, Morph};

/// Characters that always form a group of their own.
pub const PUNCTUATION: [char; 6] = ['·', '⳾', '⳿', '.', ',', ':'];

/// Punctuation that ends a sentence.
pub const SENTENCE_FINAL: [char; 2] = ['·', '.'];

pub fn is_punctuation(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

/// Output of [`segment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegResult {
    pub groups: Vec<BoundGroup>,
    /// Indices of groups without a full lexicon cover.
    pub unresolved: Vec<usize>,
}

/// Splits on whitespace and detaches punctuation characters.
pub fn split_bound_groups(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut start = 0;
        for (i, c) in chunk.char_indices() {
            if is_punctuation(c) {
                if start < i {
                    out.push(&chunk[start..i]);
                }
                out.push(&chunk[i..i + c.len_utf8()]);
                start = i + c.len_utf8();
            }
        }
        if start < chunk.len() {
            out.push(&chunk[start..]);
        }
    }
    out
}

/// Best cover of `group` by lexicon forms, or `None` if there is none.
///
/// The returned pieces borrow from `group` and concatenate back to it.
pub fn best_cover<'a>(group: &'a str, lex: &Lexicon) -> Option<Vec<&'a str>> {
    if group.is_empty() {
        return None;
    }
    let bounds: Vec<usize> = group
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(group.len()))
        .collect();
    let n = bounds.len() - 1;
    let max_len = lex.max_form_chars().min(n);
    // best[i] = (morph count, first piece length in chars) for suffix i.
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n + 1];
    best[n] = Some((0, 0));
    for i in (0..n).rev() {
        // Longest first so the first qualifying length wins count ties.
        for len in (1..=max_len.min(n - i)).rev() {
            let Some((rest, _)) = best[i + len] else {
                continue;
            };
            if !lex.contains(&group[bounds[i]..bounds[i + len]]) {
                continue;
            }
            if best[i].is_none_or(|(count, _)| rest + 1 < count) {
                best[i] = Some((rest + 1, len));
            }
        }
    }
    best[0]?;
    let mut pieces = Vec::new();
    let mut i = 0;
    while i < n {
        let (_, len) = best[i].expect("reachable suffix has a cover");
        pieces.push(&group[bounds[i]..bounds[i + len]]);
        i += len;
    }
    Some(pieces)
}

/// Morphs for one group, and whether a full cover was found.
pub fn segment_group_checked(group: &str, lex: &Lexicon) -> (Vec<Morph>, bool) {
    match best_cover(group, lex) {
        Some(pieces) => (
            pieces
                .into_iter()
                .enumerate()
                .map(|(i, p)| Morph {
                    index: i,
                    ..Morph::plain(p)
                })
                .collect(),
            true,
        ),
        None => (vec![Morph::plain(group)], false),
    }
}

/// Morphs for one group, indexed from zero within the group.
pub fn segment_group(group: &str, lex: &Lexicon) -> Vec<Morph> {
    segment_group_checked(group, lex).0
}

/// Splits and segments standardized text, numbering morphs globally.
pub fn segment(text: &str, lex: &Lexicon) -> SegResult {
    let mut groups = Vec::new();
    let mut unresolved = Vec::new();
    let mut next = 0;
    for (gi, g) in split_bound_groups(text).into_iter().enumerate() {
        let (morphs, covered) = segment_group_checked(g, lex);
        if !covered {
            unresolved.push(gi);
        }
        let n = morphs.len();
        groups.push(BoundGroup::from_morphs(next, morphs));
        next += n;
    }
    SegResult { groups, unresolved }
}
