use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use ctc_ilme::toy::{self, ToyCorpus, ToyDomain, TRAINING_WORDS};
use ctc_ilme::{apply_mask, store_lpm, MaskKey, MaskPlan};

use super::write_file;
use crate::error::{CliError, CliResult};
use crate::toylm::bigram_arpa;

#[derive(Args)]
pub struct MakeToyArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    utterances: usize,
    /// Equal partitions K for the stored masked posteriors.
    #[arg(long, default_value_t = 5)]
    partitions: usize,
    /// Sentences sampled per LM domain.
    #[arg(long, default_value_t = 2000)]
    lm_sentences: usize,
}

const DISCOUNT: f64 = 0.7;

pub fn run(args: MakeToyArgs) -> CliResult<()> {
    if args.partitions == 0 {
        return Err(CliError::validation("`--partitions` must be >= 1"));
    }
    let corpus = ToyCorpus::generate(args.seed, args.utterances);
    let vocab = &corpus.vocab;
    let post_dir = args.out.join("posteriors");
    std::fs::create_dir_all(&post_dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", post_dir.display())))?;

    let mut manifest = String::new();
    let mut refs = String::new();
    for u in &corpus.utterances {
        let plan = MaskPlan::equal(u.features.frames(), args.partitions)?;
        let mut variants = vec![(MaskKey::Original, u.features.clone())];
        for k in 0..plan.len() {
            variants.push((MaskKey::Masked(k), apply_mask(&u.features, &plan, k)?));
        }
        for (key, x) in variants {
            let name = format!("{}.{key}.lpm", u.id);
            store_lpm(&corpus.model.forward(&x)?, post_dir.join(&name))?;
            let _ = writeln!(manifest, "{}\t{key}\tposteriors/{name}", u.id);
        }
        let _ = writeln!(refs, "{}\t{}", u.id, u.text);
    }

    let tokens: Vec<String> = vocab
        .tokens()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != vocab.blank_index())
        .map(|(_, t)| t.clone())
        .collect();
    let lm_text = |seed: u64, domain: ToyDomain| -> Vec<Vec<String>> {
        toy::sample_token_sentences(seed, args.lm_sentences, domain)
            .into_iter()
            .map(|s| s.into_iter().map(|t| vocab.tokens()[t].clone()).collect())
            .collect()
    };
    let source = bigram_arpa(&lm_text(args.seed.wrapping_add(1), ToyDomain::Source), &tokens, DISCOUNT);
    let target = bigram_arpa(&lm_text(args.seed.wrapping_add(2), ToyDomain::Target), &tokens, DISCOUNT);

    let out = &args.out;
    write_file(&out.join("vocab.txt"), vocab.tokens().join("\n") + "\n")?;
    write_file(&out.join("manifest.tsv"), manifest)?;
    write_file(&out.join("refs.txt"), refs)?;
    write_file(&out.join("source.arpa"), source)?;
    write_file(&out.join("target.arpa"), target)?;
    write_file(&out.join("train_vocab.txt"), TRAINING_WORDS.join("\n") + "\n")?;
    write_file(
        &out.join("config.toml"),
        format!(
            "mode = \"ilme+sf\"\nvocab = \"vocab.txt\"\nmanifest = \"manifest.tsv\"\nlm = \"target.arpa\"\n\
             output_dir = \"run\"\n\n[masking]\npartitions = {}\n",
            args.partitions
        ),
    )?;
    println!("wrote {} utterances to {}", corpus.utterances.len(), out.display());
    Ok(())
}
