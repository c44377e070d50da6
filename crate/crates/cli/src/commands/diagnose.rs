use std::path::PathBuf;

use clap::Args;
use ctc_ilme::toy::{self, CONTEXT_RADIUS};
use ctc_ilme::{run_ilme, FileScorer, IlmConfig, MaskPlan, ToyConvModel, Vocabulary};

use super::write_file;
use crate::error::{CliError, CliResult};

#[derive(Args)]
pub struct DiagnoseArgs {
    /// Diagnose synthetic features scored by the toy model of this seed.
    #[arg(long, conflicts_with_all = ["manifest", "utterance"])]
    toy_seed: Option<u64>,
    /// Frames of the synthetic utterance.
    #[arg(long, default_value_t = 40)]
    frames: usize,
    /// Posterior manifest holding the original and masked copies.
    #[arg(long, requires_all = ["utterance", "vocab"])]
    manifest: Option<PathBuf>,
    #[arg(long)]
    utterance: Option<String>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, default_value = "<blank>")]
    blank_token: String,
    #[arg(long, default_value_t = 5)]
    partitions: usize,
    #[arg(long, default_value_t = IlmConfig::default().gamma)]
    gamma: f64,
    #[arg(long, default_value_t = IlmConfig::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = IlmConfig::default().lambda_ilm)]
    lambda_ilm: f64,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: DiagnoseArgs) -> CliResult<()> {
    let config = IlmConfig {
        gamma: args.gamma,
        beta: args.beta,
        lambda_ilm: args.lambda_ilm,
        ..IlmConfig::default()
    };
    let output = match (args.toy_seed, &args.manifest) {
        (Some(seed), _) => {
            let vocab = toy::toy_vocabulary();
            let n = vocab.len();
            let model = ToyConvModel::new(seed, n, n, CONTEXT_RADIUS);
            let x = toy::synthetic_features(seed, args.frames, n);
            let plan = MaskPlan::equal(args.frames, args.partitions)?;
            run_ilme(&model, "toy", Some(&x), &plan, &config, vocab.blank_index())?
        }
        (None, Some(manifest)) => {
            let vocab_path = args.vocab.as_ref().expect("clap enforces --vocab");
            let utt = args.utterance.as_deref().expect("clap enforces --utterance");
            let vocab = Vocabulary::load(vocab_path, &args.blank_token, None)?;
            let scorer = FileScorer::from_manifest(manifest, vocab.len())?;
            let plan = MaskPlan::equal(scorer.frames(utt)?, args.partitions)?;
            run_ilme(&scorer, utt, None, &plan, &config, vocab.blank_index())?
        }
        (None, None) => return Err(CliError::validation("give `--toy-seed` or `--manifest`")),
    };
    let text = output.diagnostics.render();
    match &args.out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
