//! Transcription canonicalization.
//!
//! Standardization runs in a fixed order: canonical decomposition, removal
//! of the configured combining marks, Coptic case folding, canonical
//! composition, whitespace collapsing, then the substitution table. The
//! output is always in NFC, and canonically equivalent inputs produce the
//! same bytes because the first step erases the difference between them.

use std::collections::BTreeSet;

use thiserror::Error;
use unicode_normalization::char::{canonical_combining_class, is_combining_mark};
use unicode_normalization::UnicodeNormalization;

/// Supralinear stroke, macron, circumflex, grave.
pub const DEFAULT_STRIP_MARKS: [char; 4] = ['\u{0305}', '\u{0304}', '\u{0302}', '\u{0300}'];

// Substitution passes stop here even if the table keeps producing matches.
const MAX_MAP_PASSES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormConfigError {
    #[error("U+{0:04X} is not a combining mark")]
    NotCombining(u32),
    #[error("substitution source is empty")]
    EmptyKey,
    #[error("substitution {from:?} -> {to:?}: {reason}")]
    UnstableMapping {
        from: String,
        to: String,
        reason: &'static str,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Normalization settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormConfig {
    strip_marks: BTreeSet<char>,
    fold_case: bool,
    collapse_ws: bool,
    char_map: Vec<(String, String)>,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            strip_marks: DEFAULT_STRIP_MARKS.into_iter().collect(),
            fold_case: true,
            collapse_ws: true,
            char_map: Vec::new(),
        }
    }
}

impl NormConfig {
    /// Builds a configuration, rejecting marks that are not combining
    /// characters and substitutions whose output would be changed again by
    /// a second standardization pass.
    pub fn new(
        strip_marks: impl IntoIterator<Item = char>,
        fold_case: bool,
        collapse_ws: bool,
        char_map: Vec<(String, String)>,
    ) -> Result<Self, NormConfigError> {
        let strip_marks: BTreeSet<char> = strip_marks.into_iter().collect();
        if let Some(&c) = strip_marks.iter().find(|&&c| !is_combining_mark(c)) {
            return Err(NormConfigError::NotCombining(c as u32));
        }
        let mut cfg = NormConfig {
            strip_marks,
            fold_case,
            collapse_ws,
            char_map: Vec::new(),
        };
        let char_map: Vec<(String, String)> = char_map
            .into_iter()
            .map(|(k, v)| (k.nfc().collect(), v.nfc().collect()))
            .collect();
        for (from, to) in &char_map {
            if from.is_empty() {
                return Err(NormConfigError::EmptyKey);
            }
            let unstable = |reason| NormConfigError::UnstableMapping {
                from: from.clone(),
                to: to.clone(),
                reason,
            };
            if from.chars().chain(to.chars()).any(char::is_whitespace) {
                return Err(unstable("whitespace is not substitutable"));
            }
            if cfg.core(to) != *to {
                return Err(unstable("replacement is not itself normalized"));
            }
            if char_map.iter().any(|(k, _)| to.contains(k.as_str())) {
                return Err(unstable("replacement contains a substitution source"));
            }
        }
        cfg.char_map = char_map;
        Ok(cfg)
    }

    pub fn strip_marks(&self) -> &BTreeSet<char> {
        &self.strip_marks
    }

    pub fn fold_case(&self) -> bool {
        self.fold_case
    }

    pub fn collapse_ws(&self) -> bool {
        self.collapse_ws
    }

    pub fn char_map(&self) -> &[(String, String)] {
        &self.char_map
    }

    /// Reads `key = value` lines:
    ///
    /// ```text
    /// strip_marks = U+0305 U+0304
    /// fold_case = true
    /// collapse_ws = true
    /// map = U+03EF -> U+2CA7 U+2C93
    /// ```
    ///
    /// `map` may repeat; substitutions apply in file order. Keys not given
    /// keep their defaults.
    pub fn parse(text: &str) -> Result<Self, NormConfigError> {
        let defaults = NormConfig::default();
        let mut strip: Vec<char> = defaults.strip_marks.iter().copied().collect();
        let mut fold = defaults.fold_case;
        let mut collapse = defaults.collapse_ws;
        let mut map = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| NormConfigError::Parse { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let value = value.trim();
            match key.trim() {
                "strip_marks" => {
                    strip = parse_code_points(value).map_err(err)?.chars().collect();
                }
                "fold_case" => fold = parse_bool(value).map_err(err)?,
                "collapse_ws" => collapse = parse_bool(value).map_err(err)?,
                "map" => {
                    let (from, to) = value
                        .split_once("->")
                        .ok_or_else(|| err("expected `map = <from> -> <to>`".into()))?;
                    map.push((
                        parse_code_points(from.trim()).map_err(err)?,
                        parse_code_points(to.trim()).map_err(err)?,
                    ));
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        NormConfig::new(strip, fold, collapse, map)
    }

    /// Decompose, strip marks, fold case, recompose.
    fn core(&self, text: &str) -> String {
        text.nfd()
            .filter(|c| !self.strip_marks.contains(c))
            .map(|c| if self.fold_case { fold_coptic(c) } else { c })
            .nfc()
            .collect()
    }
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected a boolean, found {other:?}")),
    }
}

/// Parses a space-separated `U+XXXX` sequence into a string.
fn parse_code_points(value: &str) -> Result<String, String> {
    value
        .split_whitespace()
        .map(|tok| {
            let hex = tok
                .strip_prefix("U+")
                .or_else(|| tok.strip_prefix("u+"))
                .ok_or_else(|| format!("expected U+XXXX, found {tok:?}"))?;
            u32::from_str_radix(hex, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| format!("invalid code point {tok:?}"))
        })
        .collect()
}

/// Maps a Coptic capital to its lowercase partner; other characters pass
/// through unchanged.
pub fn fold_coptic(c: char) -> char {
    let cp = c as u32;
    let is_capital = match cp {
        // Coptic block: capital/small pairs at even/odd code points.
        0x2C80..=0x2CE3 => cp.is_multiple_of(2),
        0x2CEB | 0x2CED => true,
        0x2CF2 => true,
        // Coptic letters in the Greek block (Ϣϣ … Ϯϯ).
        0x03E2..=0x03EF => cp.is_multiple_of(2),
        _ => false,
    };
    if is_capital {
        char::from_u32(cp + 1).unwrap_or(c)
    } else {
        c
    }
}

/// Standardizes a whole text.
pub fn standardize(text: &str, cfg: &NormConfig) -> String {
    let mut out = cfg.core(text);
    if cfg.collapse_ws {
        out = collapse_whitespace(&out);
    }
    if cfg.char_map.is_empty() {
        return out;
    }
    let mut units = vec![Unit {
        orig: String::new(),
        norm: out,
    }];
    apply_char_map(&mut units, cfg);
    units.pop().map(|u| u.norm).unwrap_or_default()
}

/// Standardizes the transcription of a single morph.
pub fn normalize_morph(orig: &str, cfg: &NormConfig) -> String {
    standardize(orig, cfg)
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_run = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_run {
                out.push(' ');
            }
            in_run = true;
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

/// A stretch of original text and the normalized text it produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub orig: String,
    pub norm: String,
}

/// Standardization of one bound group that remembers which original
/// characters produced which normalized ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    units: Vec<Unit>,
}

impl Alignment {
    /// Identity alignment: every character maps to itself.
    pub fn identity(text: &str) -> Self {
        Alignment {
            units: text
                .chars()
                .map(|c| Unit {
                    orig: c.to_string(),
                    norm: c.to_string(),
                })
                .collect(),
        }
    }

    /// Aligns the standardization of a whitespace-free group. The
    /// concatenated normalized text always equals [`standardize`] on the
    /// same input.
    pub fn standardize(group: &str, cfg: &NormConfig) -> Self {
        let mut units: Vec<Unit> = Vec::new();
        for c in group.chars() {
            let starts_cluster = c
                .to_string()
                .nfd()
                .next()
                .is_some_and(|d| canonical_combining_class(d) == 0);
            match units.last_mut() {
                Some(last) if !starts_cluster => last.orig.push(c),
                _ => units.push(Unit {
                    orig: c.to_string(),
                    norm: String::new(),
                }),
            }
        }
        for u in &mut units {
            u.norm = cfg.core(&u.orig);
        }
        let joined: String = units.iter().map(|u| u.norm.as_str()).collect();
        if joined != cfg.core(group) {
            // Composition crossed a cluster boundary; give up on alignment.
            units = vec![Unit {
                orig: group.to_string(),
                norm: cfg.core(group),
            }];
        }
        merge_empty_units(&mut units);
        apply_char_map(&mut units, cfg);
        merge_empty_units(&mut units);
        Alignment { units }
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn norm(&self) -> String {
        self.units.iter().map(|u| u.norm.as_str()).collect()
    }

    pub fn orig(&self) -> String {
        self.units.iter().map(|u| u.orig.as_str()).collect()
    }

    /// Splits the original text along a partition of the normalized text.
    ///
    /// `pieces` must concatenate to [`Alignment::norm`]. Each unit goes to
    /// the piece containing the unit's first normalized byte, so the
    /// returned strings always concatenate to the original text; a piece
    /// that starts inside a unit receives an empty string.
    pub fn project<S: AsRef<str>>(&self, pieces: &[S]) -> Vec<String> {
        let mut out = vec![String::new(); pieces.len()];
        if pieces.is_empty() {
            return out;
        }
        let mut ends = Vec::with_capacity(pieces.len());
        let mut acc = 0;
        for p in pieces {
            acc += p.as_ref().len();
            ends.push(acc);
        }
        let mut offset = 0;
        let mut piece = 0;
        for u in &self.units {
            while piece + 1 < ends.len() && offset >= ends[piece] {
                piece += 1;
            }
            out[piece].push_str(&u.orig);
            offset += u.norm.len();
        }
        out
    }
}

fn merge_empty_units(units: &mut Vec<Unit>) {
    let mut merged: Vec<Unit> = Vec::with_capacity(units.len());
    let mut pending = String::new();
    for u in units.drain(..) {
        if u.norm.is_empty() {
            match merged.last_mut() {
                Some(prev) => prev.orig.push_str(&u.orig),
                None => pending.push_str(&u.orig),
            }
        } else {
            let orig = std::mem::take(&mut pending) + &u.orig;
            merged.push(Unit { orig, norm: u.norm });
        }
    }
    if !pending.is_empty() {
        merged.push(Unit {
            orig: pending,
            norm: String::new(),
        });
    }
    *units = merged;
}

/// Applies the substitution table in order, repeating until nothing
/// changes. Units touched by one match are merged.
fn apply_char_map(units: &mut Vec<Unit>, cfg: &NormConfig) {
    for _ in 0..MAX_MAP_PASSES {
        let mut changed = false;
        for (from, to) in &cfg.char_map {
            changed |= substitute(units, from, to);
        }
        if !changed {
            break;
        }
    }
}

fn substitute(units: &mut Vec<Unit>, from: &str, to: &str) -> bool {
    let text: String = units.iter().map(|u| u.norm.as_str()).collect();
    let hits: Vec<usize> = text.match_indices(from).map(|(i, _)| i).collect();
    if hits.is_empty() {
        return false;
    }
    // Unit byte ranges in the concatenated text.
    let mut starts = Vec::with_capacity(units.len());
    let mut acc = 0;
    for u in units.iter() {
        starts.push(acc);
        acc += u.norm.len();
    }
    let old = std::mem::take(units);
    let mut hits = hits.into_iter().peekable();
    let mut i = 0;
    while i < old.len() {
        let unit_start = starts[i];
        let unit_end = unit_start + old[i].norm.len();
        match hits.peek().copied() {
            Some(hit) if hit < unit_end => {
                // Merge every unit overlapping this hit (and any further hits
                // that begin inside the merged range).
                let mut j = i;
                let mut merged_end = unit_end;
                let mut local_hits = Vec::new();
                while let Some(h) = hits.peek().copied() {
                    if h >= merged_end {
                        break;
                    }
                    hits.next();
                    local_hits.push(h - unit_start);
                    let hit_end = h + from.len();
                    while merged_end < hit_end {
                        j += 1;
                        merged_end += old[j].norm.len();
                    }
                }
                let orig: String = old[i..=j].iter().map(|u| u.orig.as_str()).collect();
                let norm_in: String = old[i..=j].iter().map(|u| u.norm.as_str()).collect();
                let mut norm = String::with_capacity(norm_in.len());
                let mut cursor = 0;
                for h in local_hits {
                    norm.push_str(&norm_in[cursor..h]);
                    norm.push_str(to);
                    cursor = h + from.len();
                }
                norm.push_str(&norm_in[cursor..]);
                units.push(Unit { orig, norm });
                i = j + 1;
            }
            _ => {
                units.push(old[i].clone());
                i += 1;
            }
        }
    }
    true
}
