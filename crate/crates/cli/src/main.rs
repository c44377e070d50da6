//! `ilme`: decode, evaluate and inspect masking-based ILM estimation runs.

mod commands;
mod config;
mod error;
mod toylm;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ilme", version, about = "Masking-based internal LM estimation for CTC decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a posterior manifest and write a run directory.
    Decode(commands::decode::DecodeArgs),
    /// Score hypothesis transcripts against references.
    Eval(commands::eval::EvalArgs),
    /// Score sentences with an ARPA language model.
    LmScore(commands::lm_score::LmScoreArgs),
    /// Print the frame ranges of a masking plan.
    MaskPlan(commands::mask_plan::MaskPlanArgs),
    /// Write a synthetic corpus with posteriors, references and LMs.
    MakeToy(commands::make_toy::MakeToyArgs),
    /// Print per-frame ILM diagnostics for one utterance.
    IlmDiagnose(commands::diagnose::DiagnoseArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decode(a) => commands::decode::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::LmScore(a) => commands::lm_score::run(a),
        Command::MaskPlan(a) => commands::mask_plan::run(a),
        Command::MakeToy(a) => commands::make_toy::run(a),
        Command::IlmDiagnose(a) => commands::diagnose::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
