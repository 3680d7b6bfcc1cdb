//! Recovered overlap across signal strengths, from random starts and from
//! starts with a prescribed overlap at fixed β.

use spiked_tensor::experiments::{run_threshold_sweep, ExperimentConfig, SweepMode, SweepSpec};

fn main() -> spiked_tensor::error::Result<()> {
    let mut config = ExperimentConfig::new(100, 3, vec![3.0], 20, 2)?;
    config.iteration.t_max = 30;

    let random = SweepSpec { grid: vec![0.1, 0.25, 0.5, 1.0, 2.0], mode: SweepMode::Random };
    println!("random start, grid = beta / sqrt(n)");
    for row in run_threshold_sweep(&config, &random)?.rows {
        println!("  {:>4}: {:.3} ± {:.3}", row.grid, row.mean_overlap, row.stderr);
    }

    let warm = SweepSpec { grid: vec![0.5, 1.0, 1.5, 2.0, 2.5], mode: SweepMode::Warm };
    println!("beta = 3, grid = beta <u0, v>");
    for row in run_threshold_sweep(&config, &warm)?.rows {
        println!("  {:>4}: {:.3} ± {:.3}", row.grid, row.mean_overlap, row.stderr);
    }
    Ok(())
}
