use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("{var}: {message}")]
    Env { var: &'static str, message: String },
}

/// Service settings. Read from a TOML file, then overridden by
/// `COPTIC_LISTEN`, `COPTIC_DATA_DIR`, `COPTIC_LEXICON_DIR` and
/// `COPTIC_SCHEMA_DIR`.
///
/// ```toml
/// listen = "127.0.0.1:8080"
/// data_dir = "/var/lib/coptic"
/// lexicon_dir = "/etc/coptic/lexicons"
/// schema_dir = "/etc/coptic/schemas"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    /// Extra lexicons as `<name>.lex.tsv` (+ `<name>.mwe.tsv`).
    #[serde(default)]
    pub lexicon_dir: Option<PathBuf>,
    /// Extra validation schemas as `<id>.schema`.
    #[serde(default)]
    pub schema_dir: Option<PathBuf>,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen: default_listen(),
            data_dir: default_data_dir(),
            lexicon_dir: None,
            schema_dir: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Loads `path` if given and applies overrides from `env`.
    pub fn load(path: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Config::from_toml(&text, p)?
            }
            None => Config::default(),
        };
        if let Some(v) = env("COPTIC_LISTEN") {
            cfg.listen = v.parse().map_err(|e: std::net::AddrParseError| ConfigError::Env {
                var: "COPTIC_LISTEN",
                message: e.to_string(),
            })?;
        }
        if let Some(v) = env("COPTIC_DATA_DIR") {
            cfg.data_dir = v.into();
        }
        if let Some(v) = env("COPTIC_LEXICON_DIR") {
            cfg.lexicon_dir = Some(v.into());
        }
        if let Some(v) = env("COPTIC_SCHEMA_DIR") {
            cfg.schema_dir = Some(v.into());
        }
        Ok(cfg)
    }

    pub fn from_env(path: Option<&Path>) -> Result<Self, ConfigError> {
        Config::load(path, |k| std::env::var(k).ok())
    }
}
