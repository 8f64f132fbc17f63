//! Raw text to annotated document, stage by stage.
//!
//! ```
//! use coptic_core::formats::Format;
//! use coptic_core::pipeline::{run_pipeline, LexiconRegistry, PipelineConfig};
//!
//! let cfg = PipelineConfig::all(Format::Grid);
//! let grid = run_pipeline("ⲁϥⲥⲱⲧⲙ", &cfg, &LexiconRegistry::with_fixture()).unwrap();
//! assert_eq!(
//!     grid,
//!     "orig\tnorm\tdeprel\tgroup\thead\tlang\tlemma\tmwe\tpos\n\
//!      ⲁ\tⲁ\taux\tB\t3\tegy\tⲁ\tO\tAUX\n\
//!      ϥ\tϥ\tnsubj\tI\t3\tegy\tϥ\tO\tPRON\n\
//!      ⲥⲱⲧⲙ\tⲥⲱⲧⲙ\troot\tI\t0\tegy\tⲥⲱⲧⲙ\tO\tVERB\n"
//! );
//! ```

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::formats::{render, Format, FormatError};
use crate::lexicon::{Lexicon, LexiconError};
use crate::model::{BoundGroup, DocMeta, Document, ModelError, Morph};
use crate::normalize::{Alignment, NormConfig};
use crate::segment::{best_cover, split_bound_groups};
use crate::tag::{find_mwes, lemmatize, tag_lang, tag_pos, TagError};
use crate::treebank::{parse_document, SentencePolicy, TreebankError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Standardize,
    Segment,
    TagPos,
    Lemmatize,
    TagLang,
    Mwe,
    Parse,
}

impl Stage {
    /// Every stage in running order.
    pub const ALL: [Stage; 7] = [
        Stage::Standardize,
        Stage::Segment,
        Stage::TagPos,
        Stage::Lemmatize,
        Stage::TagLang,
        Stage::Mwe,
        Stage::Parse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Standardize => "standardize",
            Stage::Segment => "segment",
            Stage::TagPos => "tag_pos",
            Stage::Lemmatize => "lemmatize",
            Stage::TagLang => "tag_lang",
            Stage::Mwe => "mwe",
            Stage::Parse => "parse",
        }
    }

    /// Stages that must run earlier.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Standardize | Stage::Segment => &[],
            Stage::TagPos | Stage::Mwe => &[Stage::Segment],
            Stage::Lemmatize | Stage::TagLang | Stage::Parse => &[Stage::TagPos],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::UnknownStage(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
    #[error("stage {0} is listed twice")]
    DuplicateStage(Stage),
    #[error("stage {stage} requires {requires} to run first")]
    MissingDependency { stage: Stage, requires: Stage },
    #[error("stage {later} must come after {earlier}")]
    OutOfOrder { earlier: Stage, later: Stage },
    #[error("conllu output requires the parse stage")]
    ConlluNeedsParse,
    #[error("unknown lexicon {0:?}")]
    UnknownLexicon(String),
    #[error("lexicon {name:?}: {source}")]
    Lexicon { name: String, source: LexiconError },
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error(transparent)]
    Treebank(#[from] TreebankError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A checked pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    stages: Vec<Stage>,
    lexicon: String,
    norm: NormConfig,
    output: Format,
}

impl PipelineConfig {
    pub fn new(
        stages: Vec<Stage>,
        lexicon: impl Into<String>,
        norm: NormConfig,
        output: Format,
    ) -> Result<Self, PipelineError> {
        for (i, &stage) in stages.iter().enumerate() {
            if stages[..i].contains(&stage) {
                return Err(PipelineError::DuplicateStage(stage));
            }
            if let Some(&later) = stages[..i].iter().find(|&&s| s > stage) {
                return Err(PipelineError::OutOfOrder { earlier: stage, later });
            }
            for &req in stage.requires() {
                if !stages[..i].contains(&req) {
                    return Err(PipelineError::MissingDependency { stage, requires: req });
                }
            }
        }
        if output == Format::Conllu && !stages.contains(&Stage::Parse) {
            return Err(PipelineError::ConlluNeedsParse);
        }
        Ok(PipelineConfig {
            stages,
            lexicon: lexicon.into(),
            norm,
            output,
        })
    }

    /// All stages, the fixture lexicon and default normalization.
    pub fn all(output: Format) -> Self {
        PipelineConfig::new(Stage::ALL.to_vec(), "fixture", NormConfig::default(), output)
            .expect("the full stage list is valid")
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn lexicon(&self) -> &str {
        &self.lexicon
    }

    pub fn norm(&self) -> &NormConfig {
        &self.norm
    }

    pub fn output(&self) -> Format {
        self.output
    }

    fn has(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }
}

/// Lexicons by name. `fixture` is always available.
#[derive(Debug, Clone, Default)]
pub struct LexiconRegistry {
    lexicons: HashMap<String, Arc<Lexicon>>,
}

impl LexiconRegistry {
    pub fn with_fixture() -> Self {
        let mut r = LexiconRegistry::default();
        r.insert("fixture", Lexicon::fixture());
        r
    }

    pub fn insert(&mut self, name: &str, lexicon: Lexicon) {
        self.lexicons.insert(name.to_string(), Arc::new(lexicon));
    }

    pub fn get(&self, name: &str) -> Result<Arc<Lexicon>, PipelineError> {
        self.lexicons
            .get(name)
            .cloned()
            .ok_or_else(|| PipelineError::UnknownLexicon(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.lexicons.keys().map(String::as_str).collect();
        names.sort();
        names
    }

    /// Adds every `<name>.lex.tsv` in `dir`, with `<name>.mwe.tsv` when present.
    pub fn load_dir(&mut self, dir: &Path) -> Result<(), PipelineError> {
        let mut paths: Vec<_> = fs::read_dir(dir)?.collect::<Result<Vec<_>, _>>()?;
        paths.sort_by_key(|e| e.file_name());
        for entry in paths {
            let file = entry.file_name().to_string_lossy().into_owned();
            let Some(name) = file.strip_suffix(".lex.tsv") else {
                continue;
            };
            let wrap = |source| PipelineError::Lexicon {
                name: name.to_string(),
                source,
            };
            let mut lex = Lexicon::from_tsv(&fs::read_to_string(entry.path())?).map_err(wrap)?;
            let mwe = dir.join(format!("{name}.mwe.tsv"));
            if mwe.is_file() {
                lex.load_mwe_tsv(&fs::read_to_string(mwe)?).map_err(wrap)?;
            }
            self.insert(name, lex);
        }
        Ok(())
    }
}

/// Builds the bound groups for `text`: standardized when asked, and
/// segmented against `lex` when given.
pub fn build_groups(text: &str, norm: Option<&NormConfig>, lex: Option<&Lexicon>) -> Vec<BoundGroup> {
    let mut groups = Vec::new();
    let mut next = 0;
    for raw in split_bound_groups(text) {
        let align = match norm {
            Some(cfg) => Alignment::standardize(raw, cfg),
            None => Alignment::identity(raw),
        };
        let normalized = align.norm();
        let morphs = if normalized.is_empty() {
            // Only strippable marks: keep the transcription as its own form.
            vec![Morph::plain(raw)]
        } else {
            let pieces = lex
                .and_then(|l| best_cover(&normalized, l))
                .unwrap_or_else(|| vec![normalized.as_str()]);
            align
                .project(&pieces)
                .into_iter()
                .zip(pieces)
                .map(|(orig, surface)| Morph::new(orig, surface))
                .collect()
        };
        let n = morphs.len();
        groups.push(BoundGroup::from_morphs(next, morphs));
        next += n;
    }
    groups
}

/// Runs every annotation stage after segmentation on an existing document.
pub fn annotate(doc: &Document, stages: &[Stage], lex: &Lexicon) -> Result<Document, PipelineError> {
    let mut doc = doc.clone();
    for stage in stages {
        doc = match stage {
            Stage::Standardize | Stage::Segment => doc,
            Stage::TagPos => doc.replace_layer(tag_pos(&doc, lex))?,
            Stage::Lemmatize => doc.replace_layer(lemmatize(&doc, lex)?)?,
            Stage::TagLang => doc.replace_layer(tag_lang(&doc, lex)?)?,
            Stage::Mwe => doc.replace_layer(find_mwes(&doc, lex))?,
            Stage::Parse => parse_document(&doc, &SentencePolicy::default())?,
        };
    }
    Ok(doc)
}

/// Runs the configured stages and returns the document.
pub fn run_pipeline_doc(
    text: &str,
    cfg: &PipelineConfig,
    lexicons: &LexiconRegistry,
) -> Result<Document, PipelineError> {
    let lex = lexicons.get(&cfg.lexicon)?;
    let norm = cfg.has(Stage::Standardize).then_some(&cfg.norm);
    let seg = cfg.has(Stage::Segment).then_some(&*lex);
    let doc = Document::new(DocMeta::new(), build_groups(text, norm, seg))?;
    annotate(&doc, &cfg.stages, &lex)
}

/// Runs the configured stages and serializes the result.
pub fn run_pipeline(text: &str, cfg: &PipelineConfig, lexicons: &LexiconRegistry) -> Result<String, PipelineError> {
    let doc = run_pipeline_doc(text, cfg, lexicons)?;
    Ok(render(&doc, cfg.output)?)
}
