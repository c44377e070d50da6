//! Run configuration: defaults, then a TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use ctc_ilme::{DecodeConfig, DecodeMode, IlmConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

/// Default worker count when neither a flag nor the config file sets one.
pub const WORKERS_ENV: &str = "ILME_WORKERS";

const PATH_KEYS: [&[&str]; 5] = [&["vocab"], &["manifest"], &["lm"], &["output_dir"], &["masking", "segments"]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskingConfig {
    /// Equal partitions K; ignored when `segments` is set.
    pub partitions: usize,
    /// Tab-separated `utterance<TAB>b1,b2,...` boundary file.
    pub segments: Option<PathBuf>,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        Self {
            partitions: 5,
            segments: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: DecodeMode,
    pub vocab: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub lm: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub nbest: usize,
    pub blank_token: String,
    /// Empty disables word-start handling.
    pub word_marker: String,
    pub ilme: IlmConfig,
    pub decode: DecodeConfig,
    pub masking: MaskingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: DecodeMode::Baseline,
            vocab: None,
            manifest: None,
            lm: None,
            output_dir: None,
            workers: None,
            nbest: 5,
            blank_token: "<blank>".into(),
            word_marker: "\u{2581}".into(),
            ilme: IlmConfig::default(),
            decode: DecodeConfig::default(),
            masking: MaskingConfig::default(),
        }
    }
}

/// A decode run whose required inputs are known to be present.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub vocab: PathBuf,
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub workers: usize,
}

fn set(table: &mut Table, key: &str, value: Value) {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("override path crosses a scalar");
    }
    cur.insert(last.to_string(), value);
}

fn anchor_paths(table: &mut Table, base: &Path) {
    for key in PATH_KEYS {
        let (leaf, parents) = key.split_last().expect("non-empty");
        let mut cur = Some(&mut *table);
        for p in parents {
            cur = cur.and_then(|t| t.get_mut(*p)).and_then(Value::as_table_mut);
        }
        if let Some(Value::String(s)) = cur.and_then(|t| t.get_mut(*leaf)) {
            if Path::new(s.as_str()).is_relative() {
                *s = base.join(s.as_str()).to_string_lossy().into_owned();
            }
        }
    }
}

fn workers_from_env() -> CliResult<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::validation(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Layers `overrides` (dotted keys) over the config file over defaults.
/// Relative paths in the file are taken relative to the file's directory.
pub fn load(file: Option<&Path>, overrides: Vec<(&str, Value)>) -> CliResult<RunConfig> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::validation(format!("cannot read config file {}: {e}", path.display())))?;
            let mut t: Table = text
                .parse()
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            anchor_paths(&mut t, path.parent().unwrap_or(Path::new(".")));
            t
        }
        None => Table::new(),
    };
    for (key, value) in overrides {
        set(&mut table, key, value);
    }
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::validation(e.message().to_string()))
}

fn required(value: &Option<PathBuf>, key: &str, why: &str) -> CliResult<PathBuf> {
    value
        .clone()
        .ok_or_else(|| CliError::validation(format!("missing required key `{key}` ({why})")))
}

impl RunConfig {
    pub fn resolve(mut self) -> CliResult<ResolvedRun> {
        let vocab = required(&self.vocab, "vocab", "token list")?;
        let manifest = required(&self.manifest, "manifest", "posterior manifest")?;
        let output_dir = required(&self.output_dir, "output_dir", "run directory")?;
        if self.mode.uses_lm() && self.lm.is_none() {
            return Err(CliError::validation(format!("missing required key `lm`: mode {} uses an external LM", self.mode)));
        }
        if self.workers.is_none() {
            self.workers = workers_from_env()?;
        }
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            return Err(CliError::validation("`workers` must be >= 1"));
        }
        if self.nbest == 0 {
            return Err(CliError::validation("`nbest` must be >= 1"));
        }
        if self.mode.uses_ilme() && self.masking.segments.is_none() && self.masking.partitions == 0 {
            return Err(CliError::validation("`masking.partitions` must be >= 1"));
        }
        self.decode.validate()?;
        if self.mode.uses_ilme() {
            self.ilme.validate()?;
        }
        Ok(ResolvedRun {
            config: self,
            vocab,
            manifest,
            output_dir,
            workers,
        })
    }

    pub fn word_marker(&self) -> Option<String> {
        (!self.word_marker.is_empty()).then(|| self.word_marker.clone())
    }
}
