//! Coverage of the β and ⟨a, v⟩ intervals for two spikes, grouped by where each
//! trial landed.

use spiked_tensor::experiments::{run_coverage_experiment, ExperimentConfig};

fn main() -> spiked_tensor::error::Result<()> {
    let n = 100;
    let root = (n as f64).sqrt();
    for alpha in [0.05, 0.5] {
        let mut config = ExperimentConfig::new(n, 3, vec![root, 1.2 * root], 150, 4)?;
        config.alpha = alpha;
        let report = run_coverage_experiment(&config)?;
        println!("nominal {:.2}:", 1.0 - alpha);
        for sp in &report.summary.per_spike {
            println!(
                "  spike {} ({} trials): beta {:.3}, <a,v> {:.3}",
                sp.spike,
                sp.trials_in_cluster,
                sp.coverage_beta.unwrap_or(f64::NAN),
                sp.coverage_linear.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
