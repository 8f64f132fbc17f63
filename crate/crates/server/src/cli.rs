//! The `coptic` command line.

use std::error::Error;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use coptic_core::formats::{self, validate, Artifact, Format, LayerKinds, ValidationSchema};
use coptic_core::normalize::NormConfig;
use coptic_core::pipeline::{run_pipeline, LexiconRegistry, PipelineConfig, Stage};
use coptic_core::store::{CommitOutcome, Repo};

use crate::config::Config;

type CliResult<T> = Result<T, Box<dyn Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(
    name = "coptic",
    version,
    about = "Coptic corpus pipeline, converter and document store"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the NLP pipeline over raw text.
    Pipeline(PipelineArgs),
    /// Convert a document between formats.
    Convert {
        #[arg(long)]
        from: Format,
        #[arg(long)]
        to: Format,
        /// Input file; stdin when absent or `-`.
        input: Option<PathBuf>,
    },
    /// Check a document against a validation schema. Exits 1 on violations.
    Validate {
        /// Schema file, or `fixture` for the bundled one.
        #[arg(long, default_value = "fixture")]
        schema: String,
        #[arg(long, default_value = "xml")]
        format: Format,
        input: Option<PathBuf>,
    },
    /// Work with the versioned document store.
    Store {
        #[arg(long, env = "COPTIC_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        #[command(subcommand)]
        command: StoreCommand,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "COPTIC_CONFIG")]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Comma-separated stages; all of them by default.
    #[arg(long, value_delimiter = ',')]
    pub stages: Option<Vec<Stage>>,
    #[arg(long, default_value = "fixture")]
    pub lexicon: String,
    #[arg(long, env = "COPTIC_LEXICON_DIR")]
    pub lexicon_dir: Option<PathBuf>,
    /// Normalization config file (`key = value` lines).
    #[arg(long)]
    pub norm: Option<PathBuf>,
    #[arg(long, default_value = "conllu")]
    pub output: Format,
    pub input: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum StoreCommand {
    /// Commit a document file as the new head.
    Commit {
        doc_id: String,
        input: Option<PathBuf>,
        #[arg(long, default_value = "xml")]
        format: Format,
        #[arg(long)]
        author: String,
        #[arg(long, short)]
        message: String,
    },
    /// Show the history, newest first.
    Log { doc_id: String },
    /// Print a committed document; the head when no commit is given.
    Checkout {
        doc_id: String,
        commit: Option<String>,
        #[arg(long, default_value = "xml")]
        format: Format,
    },
    /// Print the changes between two commits as JSON lines.
    Diff { doc_id: String, a: String, b: String },
}

fn read_input(path: Option<&PathBuf>, stdin: &mut dyn Read) -> CliResult<String> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(std::fs::read_to_string(p)?),
        _ => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

/// Runs one command. The returned code is the process exit status.
pub fn run(cli: Cli, stdin: &mut dyn Read, out: &mut dyn Write) -> CliResult<i32> {
    match cli.command {
        Command::Pipeline(args) => {
            let mut lexicons = LexiconRegistry::with_fixture();
            if let Some(dir) = &args.lexicon_dir {
                lexicons.load_dir(dir)?;
            }
            let norm = match &args.norm {
                Some(p) => NormConfig::parse(&std::fs::read_to_string(p)?)?,
                None => NormConfig::default(),
            };
            let stages = args.stages.unwrap_or_else(|| Stage::ALL.to_vec());
            let cfg = PipelineConfig::new(stages, args.lexicon, norm, args.output)?;
            let text = read_input(args.input.as_ref(), stdin)?;
            out.write_all(run_pipeline(&text, &cfg, &lexicons)?.as_bytes())?;
        }
        Command::Convert { from, to, input } => {
            let text = read_input(input.as_ref(), stdin)?;
            let doc = formats::parse(&text, from, &LayerKinds::known())?;
            out.write_all(formats::render(&doc, to)?.as_bytes())?;
        }
        Command::Validate { schema, format, input } => {
            let schema = match schema.as_str() {
                "fixture" => ValidationSchema::fixture(),
                path => ValidationSchema::parse(&std::fs::read_to_string(path)?)?,
            };
            let text = read_input(input.as_ref(), stdin)?;
            let violations = match format {
                Format::Xml => validate(Artifact::Xml(&text), &schema),
                Format::Grid => validate(Artifact::Grid(&text), &schema),
                other => {
                    let doc = formats::parse(&text, other, &LayerKinds::known())?;
                    validate(Artifact::Document(&doc), &schema)
                }
            };
            for v in &violations {
                writeln!(out, "{}", serde_json::to_string(v)?)?;
            }
            return Ok(i32::from(!violations.is_empty()));
        }
        Command::Store { data_dir, command } => {
            let repo = Repo::open(data_dir)?;
            return store(&repo, command, stdin, out);
        }
        Command::Serve { config } => {
            let cfg = Config::from_env(config.as_deref())?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::serve(cfg))?;
        }
    }
    Ok(0)
}

fn store(repo: &Repo, command: StoreCommand, stdin: &mut dyn Read, out: &mut dyn Write) -> CliResult<i32> {
    match command {
        StoreCommand::Commit {
            doc_id,
            input,
            format,
            author,
            message,
        } => {
            let text = read_input(input.as_ref(), stdin)?;
            let doc = formats::parse(&text, format, &LayerKinds::known())?;
            match repo.commit(&doc_id, &doc, &author, &message)? {
                CommitOutcome::Created(c) => writeln!(out, "{}", c.id)?,
                CommitOutcome::Unchanged(c) => {
                    writeln!(out, "{} (unchanged)", c.id)?;
                }
            }
        }
        StoreCommand::Log { doc_id } => {
            for c in repo.history(&doc_id)? {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    c.id,
                    c.timestamp,
                    c.author,
                    c.message.replace('\n', " ")
                )?;
            }
        }
        StoreCommand::Checkout { doc_id, commit, format } => {
            let doc = match commit {
                Some(id) => repo.checkout(&doc_id, &id)?,
                None => repo
                    .checkout_head(&doc_id)?
                    .ok_or_else(|| format!("document {doc_id:?} has no commits"))?,
            };
            out.write_all(formats::render(&doc, format)?.as_bytes())?;
        }
        StoreCommand::Diff { doc_id, a, b } => {
            for change in repo.diff(&doc_id, &a, &b)? {
                writeln!(out, "{}", serde_json::to_string(&change)?)?;
            }
        }
    }
    Ok(0)
}
