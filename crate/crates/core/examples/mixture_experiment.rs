//! Random starts on a two-spike tensor: how often each spike wins, against the
//! predicted weights, and how well the start predicts the winner.

use spiked_tensor::experiments::{run_mixture_experiment, ExperimentConfig};

fn main() -> spiked_tensor::error::Result<()> {
    let n = 100;
    let root = (n as f64).sqrt();
    let config = ExperimentConfig::new(n, 3, vec![root, 1.2 * root], 200, 8)?;
    let report = run_mixture_experiment(&config)?;
    let s = &report.summary;
    println!("landing counts {:?}, not converged {}", s.counts, s.not_converged);
    println!("p_hat {:.3?} vs predicted {:.3?}", s.p_hat, s.p_theory);
    println!("start-based prediction correct in {:.3} of trials", s.prediction_agreement.unwrap_or(f64::NAN));
    for c in &s.clusters {
        println!(
            "cluster {}: {} trials, KS beta {:.3}, KS linear {:.3}",
            c.spike,
            c.count,
            c.beta_stat.ks_distance.unwrap_or(f64::NAN),
            c.linear_stat.ks_distance.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
