//! One noisy rank-one tensor: estimate β and ⟨a, v⟩, debias, and build intervals.

use spiked_tensor::experiments::DirectionSpec;
use spiked_tensor::inference::{ci_beta, ci_linear_functional, debias_beta, normalized_beta_stat, normalized_linear_stat};
use spiked_tensor::linalg::dot;
use spiked_tensor::model::{build_model, BackendChoice, Spike, DEFAULT_MEMORY_BUDGET};
use spiked_tensor::power::{power_iterate, IterationConfig};
use spiked_tensor::rng::{derive_stream, unit_sphere, StreamKey, UnitVector};

fn main() -> spiked_tensor::error::Result<()> {
    let (n, k, beta) = (150, 3, 14.0);
    let mut s = derive_stream(&StreamKey::new(3, "example", 0));
    let v = unit_sphere(&mut s, n)?;
    let w = unit_sphere(&mut s, n)?;
    let u0 = UnitVector::normalize(v.iter().zip(w.iter()).map(|(a, b)| a + b).collect())?;
    let m = build_model(n, k, vec![Spike::new(beta, v.clone())], 5, BackendChoice::Auto, DEFAULT_MEMORY_BUDGET)?;
    let r = power_iterate(&m, &u0, &IterationConfig::default_for(beta, n, k, false)?)?;

    let a = DirectionSpec::Paper.resolve(n)?;
    let truth = dot(&a, &v);
    let cb = ci_beta(r.beta_hat, k, n, 0.05)?;
    let cl = ci_linear_functional(&a, &r.v_hat, r.beta_hat, n, 0.05)?;

    println!("beta = {beta}, raw estimate {:.4}, debiased {:.4}", r.beta_hat, debias_beta(r.beta_hat, k)?);
    println!("95% interval for beta: [{:.4}, {:.4}] covers: {}", cb.lo, cb.hi, cb.contains(beta));
    println!("normalized beta statistic: {:.4}", normalized_beta_stat(r.beta_hat, beta, k, n)?);
    println!("<a, v> = {truth:.5}, estimate <a, v_hat> = {:.5}", dot(&a, &r.v_hat));
    println!("95% interval for <a, v>: [{:.5}, {:.5}] covers: {}", cl.lo, cl.hi, cl.contains(truth));
    println!(
        "normalized linear statistic: {:.4}",
        normalized_linear_stat(&a, &r.v_hat, r.beta_hat, truth, n)?
    );
    Ok(())
}
