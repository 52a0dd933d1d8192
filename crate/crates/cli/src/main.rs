//! `fourierisp` command-line driver.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 data, 5 runtime.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fourierisp::imaging::{CfaPattern, Split};
use fourierisp::Error;

#[derive(Parser, Debug)]
#[command(name = "fourierisp", version, about = "Frequency-decoupled RAW-to-sRGB network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train from a TOML config (optionally resuming a checkpoint).
    Train(TrainArgs),
    /// Score a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Run a checkpoint on one RAW PNG.
    Infer(InferArgs),
    /// Write log-amplitude and phase views of an RGB PNG.
    Decompose(DecomposeArgs),
    /// Build a paired dataset by synthesizing RAW from RGB images.
    SynthData(SynthArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Continue from this checkpoint; its embedded config is used.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Override total_iters.
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dataset_root: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Defaults to the dataset root stored in the checkpoint.
    #[arg(long)]
    dataset_root: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Directory for `<split>_metrics.txt` and `.kv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Score unquantized predictions instead of 8-bit ones.
    #[arg(long)]
    no_quantize: bool,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// 16-bit RAW PNG.
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write Y_P, Y_A and spectrum views.
    #[arg(long)]
    intermediates: bool,
    /// RAW bit depth; read from a nearby meta.toml when omitted.
    #[arg(long)]
    bit_depth: Option<u8>,
    #[arg(long)]
    cfa: Option<CfaPattern>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Directory of RGB PNGs. Without it, procedural images are generated.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of procedural images when --in is absent.
    #[arg(long, default_value_t = 8)]
    procedural: usize,
    /// Side length of procedural images.
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// Images (last in name order) assigned to the test split.
    #[arg(long, default_value_t = 0)]
    test: usize,
    /// Images preceding the test ones assigned to the val split.
    #[arg(long, default_value_t = 0)]
    val: usize,
    #[arg(long, default_value_t = 10)]
    bit_depth: u8,
    #[arg(long, default_value = "RGGB")]
    cfa: CfaPattern,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::Parameter(_)) => 3,
        Some(Error::Dimension(_) | Error::Pairing { .. } | Error::Io { .. } | Error::Image { .. } | Error::Checkpoint(_)) => 4,
        _ => 5,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Infer(a) => commands::infer(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::SynthData(a) => commands::synth_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
