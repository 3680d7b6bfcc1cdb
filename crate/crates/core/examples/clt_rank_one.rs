//! Small rank-one CLT run: KS distances of both normalized statistics and an
//! SVG histogram written next to the build artifacts.
//!
//! `cargo run --release --example clt_rank_one -- [trials]`

use spiked_tensor::cli::emit_svg_histogram;
use spiked_tensor::experiments::{run_clt_experiment, ExperimentConfig, InitSpec};
use spiked_tensor::stats::{histogram, normal_pdf, uniform_edges};

fn main() -> spiked_tensor::error::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let mut config = ExperimentConfig::new(100, 3, vec![10.0], trials, 1)?;
    config.init = InitSpec::Warm { target: 0, mix: 0.5 };
    let report = run_clt_experiment(&config)?;
    let s = &report.summary;
    println!("{} trials, {} converged", s.trials, s.converged);
    println!("beta statistic:   mean {:+.3} var {:.3} KS {:.4}", s.beta_stat.mean.unwrap(), s.beta_stat.variance.unwrap(), s.beta_stat.ks_distance.unwrap());
    println!("linear statistic: mean {:+.3} var {:.3} KS {:.4}", s.linear_stat.mean.unwrap(), s.linear_stat.variance.unwrap(), s.linear_stat.ks_distance.unwrap());
    println!("interval coverage: beta {:.3}, <a,v> {:.3}", s.coverage_beta.unwrap(), s.coverage_linear.unwrap());

    let hist = histogram(&report.linear_stats(), &uniform_edges(-4.0, 4.0, 32))?;
    let svg = emit_svg_histogram(&hist, Some(&normal_pdf), "normalized <a, v_hat>")?;
    let path = std::env::temp_dir().join("clt_rank_one.svg");
    std::fs::write(&path, svg).expect("write svg");
    println!("histogram: {}", path.display());
    Ok(())
}
