use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tdi_cli::{run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "tdi", version, about = "Time-dependent imputation for clinical time series")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Impute the input panel and write the completed data.
    Impute(Args),
    /// Mask observed cells at random and score every registered imputer.
    MaskEval(Args),
    /// Like mask-eval, scoring only cells forward filling can reach.
    FfillEval(Args),
    /// Cross-validated outcome prediction from imputed features.
    Predict(Args),
    /// Write the configured synthetic panel (and labels) as CSV.
    Synth(Args),
    /// Per-variable descriptive statistics.
    Stats(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Replaces the top-level seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config `out_dir`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(command: Command, args: &Args) -> Result<PathBuf, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(|p| cfg.resolve(p)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let outputs = run(command, &cfg)?;
    outputs.write_to(&dir)?;
    Ok(dir)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Impute(a) => (Command::Impute, a),
        Cmd::MaskEval(a) => (Command::MaskEval, a),
        Cmd::FfillEval(a) => (Command::FfillEval, a),
        Cmd::Predict(a) => (Command::Predict, a),
        Cmd::Synth(a) => (Command::Synth, a),
        Cmd::Stats(a) => (Command::Stats, a),
    };
    match execute(command, args) {
        Ok(dir) => {
            log::info!("wrote outputs to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
