//! The same model under the four noise backends, and what a contraction costs.

use std::time::Instant;

use spiked_tensor::model::{build_model, BackendChoice, Spike, DEFAULT_MEMORY_BUDGET};
use spiked_tensor::rng::{derive_stream, unit_sphere, StreamKey};

fn main() -> spiked_tensor::error::Result<()> {
    let (n, k, seed) = (120, 3, 9);
    let mut s = derive_stream(&StreamKey::new(seed, "example", 0));
    let v = unit_sphere(&mut s, n)?;
    let u = unit_sphere(&mut s, n)?;
    let spikes = vec![Spike::new(15.0, v)];

    let mut outputs = Vec::new();
    for backend in [BackendChoice::Dense, BackendChoice::Streaming, BackendChoice::Zero] {
        let t = Instant::now();
        let m = build_model(n, k, spikes.clone(), seed, backend, DEFAULT_MEMORY_BUDGET)?;
        let built = t.elapsed();
        let t = Instant::now();
        let y = m.contract(&u)?;
        println!(
            "{:?}: build {built:?}, contract {:?}, X[u^k] = {:.6}",
            m.backend_kind(),
            t.elapsed(),
            m.rayleigh(&u)?
        );
        outputs.push(y);
    }
    // dense and streaming read identical entries in identical order
    assert_eq!(outputs[0], outputs[1]);

    // an explicit noise array: here, a tensor with a single non-zero entry
    let mut z = vec![0.0; 4 * 4 * 4];
    z[(2 * 4 + 1) * 4 + 3] = 1.0;
    let m = build_model(4, 3, vec![Spike::new(1.0, unit_sphere(&mut s, 4)?)], 0, BackendChoice::Injected(z), DEFAULT_MEMORY_BUDGET)?;
    println!("injected model contraction: {:?}", m.contract(&[0.0, 1.0, 0.0, 1.0])?);

    // over budget: dense fails loudly, auto falls back to streaming
    let tiny = 1 << 20;
    let err = build_model(n, k, spikes.clone(), seed, BackendChoice::Dense, tiny).unwrap_err();
    println!("dense over budget: {err}");
    let auto = build_model(n, k, spikes, seed, BackendChoice::Auto, tiny)?;
    println!("auto over budget -> {:?}", auto.backend_kind());
    Ok(())
}
