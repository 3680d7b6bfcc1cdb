//! Driving a run from config text, the same path the command-line tool takes.

use spiked_tensor::cli::run_command;
use spiked_tensor::config::{RawConfig, RunConfig, Subcommand};

const CONFIG: &str = "
seed = 11

[clt]
n = 80
k = 3
beta = sqrt_n        # about 8.94
trials = 50
init = warm

[weights]
k = 3
beta = 1, 1.2
mc_samples = 100000
";

fn main() -> spiked_tensor::error::Result<()> {
    let mut raw = RawConfig::parse(CONFIG)?;
    raw.set("alpha", "0.1")?;
    let out_dir = std::env::temp_dir().join("spiked-tensor-example");
    for cmd in [Subcommand::Clt, Subcommand::Weights] {
        let config = raw.resolve(cmd)?;
        if let RunConfig::Experiment(c) = &config {
            println!("{cmd}: n={} betas={:?} t_max={} alpha={}", c.n, c.betas, c.iteration.t_max, c.alpha);
        }
        let out = run_command(cmd, &config, &out_dir)?;
        println!("  wrote {} and {}", out.trials_csv_path.display(), out.summary_json_path.display());
        for p in out.svg_paths {
            println!("  wrote {}", p.display());
        }
    }
    Ok(())
}
