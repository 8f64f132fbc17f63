//! Form-to-analysis lexicon driving segmentation and tagging.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// The Universal Dependencies part-of-speech inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::Adj,
        Upos::Adp,
        Upos::Adv,
        Upos::Aux,
        Upos::Cconj,
        Upos::Det,
        Upos::Intj,
        Upos::Noun,
        Upos::Num,
        Upos::Part,
        Upos::Pron,
        Upos::Propn,
        Upos::Punct,
        Upos::Sconj,
        Upos::Sym,
        Upos::Verb,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
        }
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Upos {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Upos::ALL
            .into_iter()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| LexiconError::UnknownUpos(s.to_string()))
    }
}

/// Etymological source of a form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    /// Native Egyptian vocabulary.
    Egy,
    /// Greek loan.
    Grc,
    Unknown,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Egy => "egy",
            Origin::Grc => "grc",
            Origin::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "egy" => Ok(Origin::Egy),
            "grc" => Ok(Origin::Grc),
            "unknown" => Ok(Origin::Unknown),
            other => Err(LexiconError::UnknownOrigin(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("unknown UPOS tag {0:?}")]
    UnknownUpos(String),
    #[error("unknown origin {0:?}")]
    UnknownOrigin(String),
    #[error("empty form")]
    EmptyForm,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LexEntry {
    pub form: String,
    pub upos: Upos,
    pub lemma: String,
    pub origin: Origin,
    /// Dictionary link; stored, never dereferenced.
    pub url: Option<String>,
}

impl LexEntry {
    pub fn new(
        form: impl Into<String>,
        upos: Upos,
        lemma: impl Into<String>,
        origin: Origin,
    ) -> Result<Self, LexiconError> {
        let form = form.into();
        if form.is_empty() {
            return Err(LexiconError::EmptyForm);
        }
        Ok(LexEntry {
            form,
            upos,
            lemma: lemma.into(),
            origin,
            url: None,
        })
    }
}

/// A fixed sequence of forms with a joint analysis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mwe {
    pub forms: Vec<String>,
    pub upos: Upos,
    pub lemma: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, Vec<LexEntry>>,
    order: Vec<String>,
    mwes: Vec<Mwe>,
    max_form_chars: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    /// The small lexicon shipped for tests and examples.
    pub fn fixture() -> Self {
        let mut lex = Lexicon::from_tsv(include_str!("../data/fixture.lex.tsv")).expect("fixture lexicon parses");
        lex.load_mwe_tsv(include_str!("../data/fixture.mwe.tsv"))
            .expect("fixture MWE list parses");
        lex
    }

    pub fn insert(&mut self, entry: LexEntry) {
        self.max_form_chars = self.max_form_chars.max(entry.form.chars().count());
        let bucket = self.entries.entry(entry.form.clone()).or_default();
        if bucket.is_empty() {
            self.order.push(entry.form.clone());
        }
        bucket.push(entry);
    }

    pub fn insert_mwe(&mut self, mwe: Mwe) -> Result<(), LexiconError> {
        if mwe.forms.is_empty() || mwe.forms.iter().any(String::is_empty) {
            return Err(LexiconError::EmptyForm);
        }
        self.mwes.push(mwe);
        Ok(())
    }

    /// All entries for `form`, in insertion order.
    pub fn lookup(&self, form: &str) -> &[LexEntry] {
        self.entries.get(form).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, form: &str) -> bool {
        self.entries.contains_key(form)
    }

    /// Distinct forms in first-insertion order.
    pub fn forms(&self) -> impl Iterator<Item = &str> + '_ {
        self.order.iter().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexEntry> + '_ {
        self.order.iter().flat_map(|f| self.entries[f].iter())
    }

    pub fn mwes(&self) -> &[Mwe] {
        &self.mwes
    }

    /// Length in characters of the longest form.
    pub fn max_form_chars(&self) -> usize {
        self.max_form_chars
    }

    /// Parses `form\tupos\tlemma\torigin[\turl]` lines. A first line
    /// starting with `form\t` is a header; `#` lines are comments.
    pub fn from_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            if i == 0 && line.starts_with("form\t") {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if !(4..=5).contains(&cols.len()) {
                return Err(LexiconError::Parse {
                    line: line_no,
                    message: format!("expected 4 or 5 columns, found {}", cols.len()),
                });
            }
            let at = |e: LexiconError| LexiconError::Parse {
                line: line_no,
                message: e.to_string(),
            };
            let mut entry = LexEntry::new(
                cols[0],
                cols[1].parse().map_err(at)?,
                cols[2],
                cols[3].parse().map_err(at)?,
            )
            .map_err(at)?;
            entry.url = cols.get(4).filter(|u| !u.is_empty()).map(|u| u.to_string());
            lex.insert(entry);
        }
        Ok(lex)
    }

    /// Parses `form form ...\tupos\tlemma` lines into the MWE list.
    pub fn load_mwe_tsv(&mut self, text: &str) -> Result<(), LexiconError> {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let err = |message: String| LexiconError::Parse { line: i + 1, message };
            if cols.len() != 3 {
                return Err(err(format!("expected 3 columns, found {}", cols.len())));
            }
            let forms: Vec<String> = cols[0].split(' ').filter(|f| !f.is_empty()).map(String::from).collect();
            if forms.is_empty() {
                return Err(err("empty form sequence".into()));
            }
            let upos = cols[1].parse().map_err(|e: LexiconError| err(e.to_string()))?;
            self.insert_mwe(Mwe {
                forms,
                upos,
                lemma: cols[2].to_string(),
            })
            .map_err(|e| err(e.to_string()))?;
        }
        Ok(())
    }

    /// Content hash over entries and MWEs, usable as a version tag.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for e in self.entries() {
            for field in [
                e.form.as_str(),
                e.upos.as_str(),
                e.lemma.as_str(),
                e.origin.as_str(),
                e.url.as_deref().unwrap_or(""),
            ] {
                h.update((field.len() as u64).to_le_bytes());
                h.update(field.as_bytes());
            }
        }
        h.update(b"mwe");
        for m in &self.mwes {
            let forms = m.forms.join(" ");
            for field in [forms.as_str(), m.upos.as_str(), m.lemma.as_str()] {
                h.update((field.len() as u64).to_le_bytes());
                h.update(field.as_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}
