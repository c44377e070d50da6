use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use clap::Args;
use ctc_ilme::eval::{load_word_list, EvalReport, RunInput, TextNormalization};

use super::{read_text, write_file};
use crate::error::{CliError, CliResult};

#[derive(Args)]
pub struct EvalArgs {
    /// Reference transcripts, `id<TAB>text` per line.
    #[arg(long)]
    refs: PathBuf,
    /// A single hypothesis file, reported as run `hyp`.
    #[arg(long)]
    hyp: Option<PathBuf>,
    /// Labelled run `LABEL=PATH`, e.g. `SF+target=run/transcripts.txt`; repeatable.
    #[arg(long = "run", value_name = "LABEL=PATH")]
    runs: Vec<String>,
    /// Label of the run WERR is measured against (default: the first).
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, default_value = "eval")]
    dataset: String,
    /// Training vocabulary; reference words outside it are scored as OOV terms.
    #[arg(long)]
    train_vocab: Option<PathBuf>,
    /// Also write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    keep_case: bool,
    #[arg(long)]
    keep_punctuation: bool,
}

/// `id<TAB>text` lines; a line without a tab is an id with empty text.
fn read_transcripts(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line.split_once('\t').unwrap_or((line, ""));
        if out.insert(id.trim().to_string(), text.to_string()).is_some() {
            return Err(CliError::runtime(format!("{}:{}: duplicate id {id:?}", path.display(), i + 1)));
        }
    }
    Ok(out)
}

pub fn run(args: EvalArgs) -> CliResult<()> {
    let mut specs: Vec<(String, PathBuf)> = Vec::new();
    if let Some(h) = &args.hyp {
        specs.push(("hyp".into(), h.clone()));
    }
    for r in &args.runs {
        let (label, path) = r
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("`--run` expects LABEL=PATH, got {r:?}")))?;
        specs.push((label.to_string(), PathBuf::from(path)));
    }
    if specs.is_empty() {
        return Err(CliError::validation("give `--hyp` or at least one `--run`"));
    }
    let refs = read_transcripts(&args.refs)?;
    let runs = specs
        .iter()
        .map(|(label, path)| {
            Ok(RunInput {
                label: label.clone(),
                hypotheses: read_transcripts(path)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let train: Option<HashSet<String>> = args.train_vocab.as_ref().map(load_word_list).transpose()?;
    let norm = TextNormalization {
        case_fold: !args.keep_case,
        strip_punctuation: !args.keep_punctuation,
    };
    let report = EvalReport::evaluate(&args.dataset, &refs, &runs, args.baseline.as_deref(), &norm, train.as_ref())
        .map_err(|e| CliError::validation(e.to_string()))?;
    print!("{}", report.render_text());
    if let Some(p) = &args.json {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::runtime(e.to_string()))?;
        write_file(p, json + "\n")?;
    }
    Ok(())
}
