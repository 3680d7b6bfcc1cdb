use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spiked_tensor::cli::run_command;
use spiked_tensor::config::{RawConfig, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Rank-one CLT study of the normalized estimators
    Clt,
    /// Confidence-interval coverage per spike
    Coverage,
    /// Which spike random starts land on, against the predicted weights
    Mixture,
    /// Mean recovered overlap over a grid of signal strengths
    Sweep,
    /// Mixture weights by quadrature (and optionally Monte Carlo)
    Weights,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Clt => Subcommand::Clt,
            Command::Coverage => Subcommand::Coverage,
            Command::Mixture => Subcommand::Mixture,
            Command::Sweep => Subcommand::Sweep,
            Command::Weights => Subcommand::Weights,
        }
    }
}

/// Simulation and inference for the spiked tensor model.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Flat key=value config file with optional [command] sections
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for the CSV, JSON and SVG outputs
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Extra `key=value` assignments, applied after the config file
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

fn run(args: Args) -> spiked_tensor::error::Result<()> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    for pair in &args.overrides {
        raw.set_pair(pair)?;
    }
    if let Some(seed) = args.seed {
        raw.set("seed", &seed.to_string())?;
    }
    let cmd = Subcommand::from(args.command);
    let config = raw.resolve(cmd)?;
    let out = run_command(cmd, &config, &args.out_dir)?;
    println!("{}", out.trials_csv_path.display());
    println!("{}", out.summary_json_path.display());
    for p in &out.svg_paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
