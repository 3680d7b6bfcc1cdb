//! Probability that a uniformly random start ends at each spike: quadrature,
//! the two-spike closed form, and a Monte Carlo check.

use std::f64::consts::PI;

use spiked_tensor::inference::{mixture_weights, mixture_weights_mc};
use spiked_tensor::rng::{derive_stream, StreamKey};

fn main() -> spiked_tensor::error::Result<()> {
    let mut s = derive_stream(&StreamKey::new(0, "example", 0));
    for k in [3, 4, 6] {
        let betas = [1.0, 1.2];
        let p = mixture_weights(&betas, k)?.p;
        let closed = 2.0 / PI * (betas[0] / betas[1]).powf(1.0 / (k as f64 - 2.0)).atan();
        let mc = mixture_weights_mc(&betas, k, 200_000, &mut s)?.p;
        println!("k={k}: quadrature {:.6}  closed form {closed:.6}  monte carlo {:.4}", p[0], mc[0]);
    }

    let betas = [1.0, 1.5, 2.0, 3.0];
    let p = mixture_weights(&betas, 3)?.p;
    println!("four spikes {betas:?}: {p:.4?} (sum {:.10})", p.iter().sum::<f64>());

    match mixture_weights(&[1.0, 2.0], 2) {
        Err(e) => println!("k=2: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
