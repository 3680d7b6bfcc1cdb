//! The four limits of rank-one power iteration by parity of k and sign of β,
//! on noiseless tensors, then one noisy run with its trajectory.

use spiked_tensor::linalg::dot;
use spiked_tensor::model::{build_model, BackendChoice, Spike, DEFAULT_MEMORY_BUDGET};
use spiked_tensor::power::{classify_expected_limit, power_iterate, theory_iterations, IterationConfig};
use spiked_tensor::rng::{derive_stream, unit_sphere, StreamKey, UnitVector};

fn main() -> spiked_tensor::error::Result<()> {
    let n = 60;
    let mut s = derive_stream(&StreamKey::new(1, "example", 0));
    let v = unit_sphere(&mut s, n)?;
    let w = unit_sphere(&mut s, n)?;
    let u0 = UnitVector::normalize(v.iter().zip(w.iter()).map(|(a, b)| a + b).collect())?;
    let config = IterationConfig::new(100, 1e-10)?;

    println!("{:<3} {:>6} {:>14} {:>10} {:>12} {:>6}", "k", "beta", "status", "beta_hat", "<v_hat,v>", "iters");
    for (k, beta) in [(3, 6.0), (3, -6.0), (4, 6.0), (4, -6.0)] {
        let m = build_model(n, k, vec![Spike::new(beta, v.clone())], 0, BackendChoice::Zero, DEFAULT_MEMORY_BUDGET)?;
        let r = power_iterate(&m, &u0, &config)?;
        let expected = classify_expected_limit(k, beta, dot(&u0, &v))?;
        assert_eq!(r.beta_hat.round(), expected.beta_limit.round());
        println!(
            "{k:<3} {beta:>6} {:>14} {:>10.6} {:>12.6} {:>6}",
            r.status.as_str(),
            r.beta_hat,
            dot(&r.v_hat, &v),
            r.iterations_used
        );
    }

    let beta = 12.0;
    println!("\ntheory iterations at beta={beta}, n={n}: {}", theory_iterations(beta, n, 3, 0.1, false)?);
    let m = build_model(n, 3, vec![Spike::new(beta, v.clone())], 77, BackendChoice::Dense, DEFAULT_MEMORY_BUDGET)?;
    let r = power_iterate(&m, &u0, &IterationConfig::default_for(beta, n, 3, false)?.with_trajectory())?;
    println!("noisy run: {} after {} steps, beta_hat = {:.4}", r.status.as_str(), r.iterations_used, r.beta_hat);
    for (t, lag) in r.overlaps.unwrap_or_default() {
        println!("  t={t:<2} 1 - <u_t+1, u_t> = {:.3e}", 1.0 - lag);
    }
    Ok(())
}
