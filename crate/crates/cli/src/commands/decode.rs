use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use ctc_ilme::decoder::{render_nbest, render_transcripts, CorpusJob, CorpusUtterance, MaskStrategy};
use ctc_ilme::masking::load_segments;
use ctc_ilme::{decode_corpus, FileScorer, MaskKey, NGramModel, Vocabulary};
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::Value;

use super::write_file;
use crate::config::{self, ResolvedRun, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Args, Default)]
pub struct DecodeArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// baseline, sf, ilme or ilme+sf.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Tab-separated `utterance<TAB>orig|k<TAB>path.lpm` lines.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// External ARPA LM for the fusion modes.
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Run directory for transcripts, n-best lists, diagnostics and run.json.
    #[arg(long = "out")]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: $ILME_WORKERS, else 1).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    nbest: Option<usize>,
    #[arg(long)]
    beam_size: Option<usize>,
    /// External LM weight.
    #[arg(long)]
    lambda_lm: Option<f64>,
    /// ILM subtraction weight.
    #[arg(long)]
    lambda_ilm: Option<f64>,
    /// Relative-change threshold selecting contributing masks.
    #[arg(long)]
    gamma: Option<f64>,
    /// Blank-probability gate for the subtraction.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    partitions: Option<usize>,
    /// Per-utterance boundary file; replaces equal partitions.
    #[arg(long)]
    segments: Option<PathBuf>,
    /// token or word.
    #[arg(long)]
    fusion_unit: Option<String>,
    #[arg(long)]
    insertion_bonus: Option<f64>,
    #[arg(long)]
    prune: Option<f64>,
    /// Score masked copies one request at a time.
    #[arg(long)]
    sequential: bool,
}

fn path_value(p: &Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

impl DecodeArgs {
    fn overrides(&self) -> Vec<(&'static str, Value)> {
        let mut o = Vec::new();
        let int = |v: usize| Value::Integer(v as i64);
        macro_rules! put {
            ($field:expr, $key:literal, $conv:expr) => {
                if let Some(v) = &$field {
                    o.push(($key, $conv(v)));
                }
            };
        }
        put!(self.mode, "mode", |v: &String| Value::String(v.clone()));
        put!(self.vocab, "vocab", |v: &PathBuf| path_value(v));
        put!(self.manifest, "manifest", |v: &PathBuf| path_value(v));
        put!(self.lm, "lm", |v: &PathBuf| path_value(v));
        put!(self.output_dir, "output_dir", |v: &PathBuf| path_value(v));
        put!(self.workers, "workers", |v: &usize| int(*v));
        put!(self.nbest, "nbest", |v: &usize| int(*v));
        put!(self.beam_size, "decode.beam_size", |v: &usize| int(*v));
        put!(self.lambda_lm, "decode.lambda_lm", |v: &f64| Value::Float(*v));
        put!(self.insertion_bonus, "decode.token_insertion_bonus", |v: &f64| Value::Float(*v));
        put!(self.prune, "decode.prune_log_threshold", |v: &f64| Value::Float(*v));
        put!(self.fusion_unit, "decode.fusion_unit", |v: &String| Value::String(v.clone()));
        put!(self.lambda_ilm, "ilme.lambda_ilm", |v: &f64| Value::Float(*v));
        put!(self.gamma, "ilme.gamma", |v: &f64| Value::Float(*v));
        put!(self.beta, "ilme.beta", |v: &f64| Value::Float(*v));
        put!(self.partitions, "masking.partitions", |v: &usize| int(*v));
        put!(self.segments, "masking.segments", |v: &PathBuf| path_value(v));
        if self.sequential {
            o.push(("ilme.batched", Value::Boolean(false)));
        }
        o
    }
}

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    config: &'a RunConfig,
    workers: usize,
    inputs: BTreeMap<String, InputRecord>,
    utterances: usize,
    failed: usize,
}

fn sha256_file(path: &Path) -> CliResult<InputRecord> {
    let bytes = std::fs::read(path).map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(InputRecord {
        path: path.to_string_lossy().into_owned(),
        sha256: hex,
    })
}

pub fn run(args: DecodeArgs) -> CliResult<()> {
    let cfg = config::load(args.config.as_deref(), args.overrides())?;
    let run = cfg.resolve()?;
    execute(&run)
}

fn execute(run: &ResolvedRun) -> CliResult<()> {
    let cfg = &run.config;
    let vocab = Vocabulary::load(&run.vocab, &cfg.blank_token, cfg.word_marker())?;
    let scorer = FileScorer::from_manifest(&run.manifest, vocab.len())?;
    let lm = match (&cfg.lm, cfg.mode.uses_lm()) {
        (Some(p), true) => Some(NGramModel::from_path(p)?),
        _ => None,
    };
    let masking = match &cfg.masking.segments {
        Some(p) => MaskStrategy::Segments(load_segments(p)?),
        None => MaskStrategy::Equal(cfg.masking.partitions),
    };

    let mut inputs = BTreeMap::new();
    inputs.insert("vocab".to_string(), sha256_file(&run.vocab)?);
    inputs.insert("manifest".to_string(), sha256_file(&run.manifest)?);
    if let (Some(p), true) = (&cfg.lm, lm.is_some()) {
        inputs.insert("lm".to_string(), sha256_file(p)?);
    }
    if let Some(p) = &cfg.masking.segments {
        inputs.insert("segments".to_string(), sha256_file(p)?);
    }
    let mut utterances = Vec::with_capacity(scorer.utterances().len());
    for utt in scorer.utterances() {
        let mut keys = vec![MaskKey::Original];
        if cfg.mode.uses_ilme() {
            keys.extend(scorer.masks(utt).into_iter().map(MaskKey::Masked));
        }
        for key in keys {
            if let Some(p) = scorer.path(utt, key) {
                inputs.insert(format!("posterior:{utt}:{key}"), sha256_file(p)?);
            }
        }
        utterances.push(CorpusUtterance {
            id: utt.clone(),
            features: None,
            frames: scorer.frames(utt)?,
        });
    }

    let job = CorpusJob {
        scorer: &scorer,
        vocab: &vocab,
        lm: lm.as_ref(),
        mode: cfg.mode,
        ilm: cfg.ilme,
        decode: cfg.decode,
        masking,
        workers: run.workers,
    };
    let results = decode_corpus(&job, &utterances)?;

    let out = &run.output_dir;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out.display())))?;
    write_file(&out.join("transcripts.txt"), render_transcripts(&results, &vocab))?;
    write_file(&out.join("nbest.txt"), render_nbest(&results, &vocab, cfg.nbest))?;
    if cfg.mode.uses_ilme() {
        let mut diag = String::new();
        for r in &results {
            if let Ok(d) = &r.outcome {
                if let Some(d) = &d.diagnostics {
                    let _ = writeln!(diag, "## {}", r.id);
                    diag.push_str(&d.render());
                }
            }
        }
        write_file(&out.join("diagnostics.txt"), diag)?;
    }
    let failures: Vec<String> = results
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("{}\t{e}\n", r.id)))
        .collect();
    let errors_path = out.join("errors.txt");
    if failures.is_empty() {
        if errors_path.exists() {
            std::fs::remove_file(&errors_path)?;
        }
    } else {
        write_file(&errors_path, failures.concat())?;
        eprintln!("warning: {} utterance(s) failed, see {}", failures.len(), errors_path.display());
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        workers: run.workers,
        inputs,
        utterances: results.len(),
        failed: failures.len(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::runtime(e.to_string()))?;
    write_file(&out.join("run.json"), json + "\n")?;
    println!(
        "decoded {} utterance(s), {} failed, mode {} -> {}",
        results.len(),
        failures.len(),
        cfg.mode,
        out.display()
    );
    Ok(())
}
