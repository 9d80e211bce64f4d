use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod describe;
mod eval;
mod fps;
mod infer;
mod mix;
mod output;
mod pres3;

/// Exit status for malformed input, bad flags and failed validation.
const EXIT_INPUT: u8 = 2;
/// Exit status when the annotation pipeline gives up.
const EXIT_PIPELINE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "bestshot",
    version,
    about = "Pose descriptions, frame retrieval and benchmark scoring"
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Seed for every random choice; runs with the same seed are byte-identical.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON config file (see README for the sections it may contain).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Describe poses in natural language.
    Describe(describe::DescribeArgs),
    /// Pick diverse pose subsets by furthest point sampling.
    Fps(fps::FpsArgs),
    /// Select frames or segments from embeddings.
    #[command(subcommand)]
    Infer(infer::InferCommand),
    /// Score predictions against annotations.
    #[command(subcommand)]
    Eval(eval::EvalCommand),
    /// Run the keyframe annotation pipeline.
    #[command(subcommand)]
    Pres3(pres3::Pres3Command),
    /// Interleave datasets at fixed ratios.
    Mix(mix::MixArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = config::Config::load(cli.global.config.as_deref())?;
    let seed = cli.global.seed;
    match cli.command {
        Command::Describe(a) => describe::run(a, &cfg, seed),
        Command::Fps(a) => fps::run(a, seed),
        Command::Infer(c) => infer::run(c, &cfg),
        Command::Eval(c) => eval::run(c),
        Command::Pres3(c) => pres3::run(c, &cfg, seed),
        Command::Mix(a) => mix::run(a, seed),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let pipeline = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<bestshot_core::Error>(),
            Some(bestshot_core::Error::Pipeline(_))
        )
    });
    if pipeline {
        EXIT_PIPELINE
    } else {
        EXIT_INPUT
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
