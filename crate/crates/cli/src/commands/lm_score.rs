use std::io::Read;
use std::path::PathBuf;

use clap::Args;
use ctc_ilme::NGramModel;

use super::read_text;
use crate::error::{CliError, CliResult};

#[derive(Args)]
pub struct LmScoreArgs {
    /// ARPA file, optionally gzip-compressed.
    #[arg(long)]
    lm: PathBuf,
    /// One whitespace-tokenized sentence per line; stdin when absent.
    #[arg(long)]
    text: Option<PathBuf>,
    /// Report base-10 instead of natural-log probabilities.
    #[arg(long)]
    log10: bool,
}

/// Prints `score<TAB>sentence` per line, then the total.
pub fn run(args: LmScoreArgs) -> CliResult<()> {
    let lm = NGramModel::from_path(&args.lm)?;
    let text = match &args.text {
        Some(p) => read_text(p)?,
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    let scale = if args.log10 { std::f64::consts::LN_10.recip() } else { 1.0 };
    let mut total = 0.0;
    for (i, line) in text.lines().enumerate() {
        let words: Vec<&str> = line.split_whitespace().collect();
        let score = lm
            .score_sequence(&words)
            .map_err(|e| CliError::runtime(format!("line {}: {e}", i + 1)))?
            * scale;
        total += score;
        println!("{score}\t{}", words.join(" "));
    }
    println!("total\t{total}");
    Ok(())
}
