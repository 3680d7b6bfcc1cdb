//! Estimator post-processing: bias correction of the Rayleigh quotient, the
//! standardized statistics for `β̂` and `⟨a, v̂⟩`, their confidence intervals,
//! and the probabilities `p_i` that a uniformly random start ends at spike `i`.

use crate::error::{invalid, Error, Result};
use crate::linalg::dot;
use crate::rng::RandomStream;
use crate::stats::{erf, two_sided_critical};

const DEGENERATE_PROJECTION: f64 = 1e-12;

/// A closed interval `[lo, hi]` with its nominal coverage `level = 1 - α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, level: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(invalid(format!("interval bounds out of order: [{lo}, {hi}]")));
        }
        if !(0.0..1.0).contains(&level) {
            return Err(invalid(format!("interval level must lie in [0, 1), got {level}")));
        }
        Ok(Self { lo, hi, level })
    }

    fn centered(center: f64, half_width: f64, level: f64) -> Result<Self> {
        Self::new(center - half_width, center + half_width, level)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn check_beta_hat(beta_hat: f64) -> Result<()> {
    if beta_hat == 0.0 || !beta_hat.is_finite() {
        return Err(invalid(format!("beta_hat must be finite and non-zero, got {beta_hat}")));
    }
    Ok(())
}

/// `β̂ + (k/2 - 1) / β̂`.
pub fn debias_beta(beta_hat: f64, k: usize) -> Result<f64> {
    check_beta_hat(beta_hat)?;
    Ok(beta_hat + (k as f64 / 2.0 - 1.0) / beta_hat)
}

/// `√n (debias_beta(β̂, k) - β)`, asymptotically standard normal.
pub fn normalized_beta_stat(beta_hat: f64, beta_true: f64, k: usize, n: usize) -> Result<f64> {
    Ok((n as f64).sqrt() * (debias_beta(beta_hat, k)? - beta_true))
}

/// Shared pieces of the linear-functional statistic: `⟨a, v̂⟩`, the projected
/// variance `⟨a, (I - v̂v̂ᵀ) a⟩` and the shrinkage `1 - 1/(2β̂²)`.
fn linear_parts(a: &[f64], v_hat: &[f64], beta_hat: f64) -> Result<(f64, f64, f64)> {
    check_beta_hat(beta_hat)?;
    if a.len() != v_hat.len() {
        return Err(invalid("a and v_hat differ in length"));
    }
    let aa = dot(a, a);
    if (aa.sqrt() - 1.0).abs() > 1e-8 {
        return Err(invalid(format!("direction a must be a unit vector, norm is {}", aa.sqrt())));
    }
    let av = dot(a, v_hat);
    let projected = aa - av * av;
    if projected <= DEGENERATE_PROJECTION {
        return Err(Error::DegenerateDirection { projected });
    }
    let shrink = 1.0 - 1.0 / (2.0 * beta_hat * beta_hat);
    if shrink == 0.0 {
        return Err(invalid("1 - 1/(2 beta_hat^2) vanishes"));
    }
    Ok((av, projected, shrink))
}

/// `√n β̂ / √⟨a,(I - v̂v̂ᵀ)a⟩ · [⟨a, v̂⟩ / (1 - 1/(2β̂²)) - target]`.
pub fn normalized_linear_stat(a: &[f64], v_hat: &[f64], beta_hat: f64, target: f64, n: usize) -> Result<f64> {
    let (av, projected, shrink) = linear_parts(a, v_hat, beta_hat)?;
    Ok((n as f64).sqrt() * beta_hat / projected.sqrt() * (av / shrink - target))
}

/// Confidence interval for `⟨a, v⟩` at significance `alpha`.
pub fn ci_linear_functional(a: &[f64], v_hat: &[f64], beta_hat: f64, n: usize, alpha: f64) -> Result<Interval> {
    let z = two_sided_critical(alpha)?;
    let (av, projected, shrink) = linear_parts(a, v_hat, beta_hat)?;
    let half = z * projected.sqrt() / ((n as f64).sqrt() * beta_hat.abs()) / shrink.abs();
    Interval::centered(av / shrink, half, 1.0 - alpha)
}

/// Confidence interval for `β` at significance `alpha`: `debias_beta ± z_α / √n`.
pub fn ci_beta(beta_hat: f64, k: usize, n: usize, alpha: f64) -> Result<Interval> {
    let z = two_sided_critical(alpha)?;
    Interval::centered(debias_beta(beta_hat, k)?, z / (n as f64).sqrt(), 1.0 - alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights {
    pub p: Vec<f64>,
}

fn check_mixture_inputs(betas: &[f64], k: usize) -> Result<()> {
    if k == 2 {
        return Err(Error::UnsupportedOrder(k));
    }
    if k < 2 {
        return Err(invalid(format!("tensor order must be at least 2, got {k}")));
    }
    if betas.is_empty() {
        return Err(invalid("need at least one spike strength"));
    }
    if let Some(b) = betas.iter().find(|b| **b == 0.0 || !b.is_finite()) {
        return Err(invalid(format!("spike strengths must be finite and non-zero, got {b}")));
    }
    Ok(())
}

/// Upper end of the outer integral; the half-normal tail beyond it is below 1e-31.
const OUTER_CUTOFF: f64 = 12.0;
const QUADRATURE_TOL: f64 = 1e-10;

/// `p_i = ∫_0^∞ √(2/π) e^{-x²/2} Π_{ℓ≠i} erf(ρ_{iℓ} x / √2) dx` with
/// `ρ_{iℓ} = (|β_i| / |β_ℓ|)^{1/(k-2)}`, by adaptive Simpson quadrature.
pub fn mixture_weights(betas: &[f64], k: usize) -> Result<MixtureWeights> {
    check_mixture_inputs(betas, k)?;
    if betas.len() == 1 {
        return Ok(MixtureWeights { p: vec![1.0] });
    }
    let exponent = 1.0 / (k as f64 - 2.0);
    let half_normal = (2.0 / std::f64::consts::PI).sqrt();
    let p = (0..betas.len())
        .map(|i| {
            let ratios: Vec<f64> = betas
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != i)
                .map(|(_, b)| (betas[i].abs() / b.abs()).powf(exponent) * std::f64::consts::FRAC_1_SQRT_2)
                .collect();
            let integrand = |x: f64| {
                half_normal * (-0.5 * x * x).exp() * ratios.iter().map(|c| erf(c * x)).product::<f64>()
            };
            adaptive_simpson(&integrand, 0.0, OUTER_CUTOFF, QUADRATURE_TOL)
        })
        .collect();
    Ok(MixtureWeights { p })
}

/// Monte Carlo estimate of the same probabilities: the frequency with which
/// `argmax_j |β_j| |g_j|^{k-2}` lands on each index for standard Gaussian `g`.
pub fn mixture_weights_mc(betas: &[f64], k: usize, samples: usize, stream: &mut RandomStream) -> Result<MixtureWeights> {
    check_mixture_inputs(betas, k)?;
    if samples < 1 {
        return Err(invalid("need at least one Monte Carlo sample"));
    }
    let mut counts = vec![0usize; betas.len()];
    let mut scores = vec![0.0; betas.len()];
    for _ in 0..samples {
        for (s, b) in scores.iter_mut().zip(betas) {
            *s = b.abs() * stream.next_standard_normal().abs().powi(k as i32 - 2);
        }
        counts[crate::linalg::argmax_abs(&scores).expect("non-empty")] += 1;
    }
    Ok(MixtureWeights {
        p: counts.iter().map(|&c| c as f64 / samples as f64).collect(),
    })
}

/// Adaptive Simpson on `[a, b]`, split into unit-length panels first so the
/// first error estimate cannot be fooled by a coarse three-point sample.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let panels = ((b - a).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    (0..panels)
        .map(|j| {
            let lo = a + h * j as f64;
            let hi = if j + 1 == panels { b } else { lo + h };
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            simpson_step(f, lo, hi, flo, fmid, fhi, whole, panel_tol, 50)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, StreamKey};
    use std::f64::consts::PI;

    fn closed_form_two(b1: f64, b2: f64, k: usize) -> f64 {
        2.0 / PI * (b1.abs() / b2.abs()).powf(1.0 / (k as f64 - 2.0)).atan()
    }

    #[test]
    fn debias_examples() {
        assert_eq!(debias_beta(7.0, 2).unwrap(), 7.0);
        assert!((debias_beta(10.0, 3).unwrap() - 10.05).abs() < 1e-15);
        assert_eq!(debias_beta(2.0, 4).unwrap(), 2.5);
        assert!(debias_beta(0.0, 3).is_err());
    }

    #[test]
    fn beta_stat_zero_at_truth() {
        let b = 20.0;
        let truth = debias_beta(b, 3).unwrap();
        assert_eq!(normalized_beta_stat(b, truth, 3, 400).unwrap(), 0.0);
        assert!(normalized_beta_stat(20.0, 20.025, 3, 400).unwrap().abs() < 1e-12);
    }

    fn unit_with_overlap(c: f64) -> (Vec<f64>, Vec<f64>) {
        let a = vec![c, (1.0 - c * c).sqrt(), 0.0];
        let v = vec![1.0, 0.0, 0.0];
        (a, v)
    }

    #[test]
    fn linear_stat_zero_when_centered() {
        let beta = 12.0;
        let (a, v) = unit_with_overlap(0.3);
        let target = 0.3 / (1.0 - 1.0 / (2.0 * beta * beta));
        assert!(normalized_linear_stat(&a, &v, beta, target, 100).unwrap().abs() < 1e-12);
        assert!(matches!(
            normalized_linear_stat(&v, &v, beta, 0.0, 100),
            Err(Error::DegenerateDirection { .. })
        ));
        assert!(normalized_linear_stat(&[2.0, 0.0, 0.0], &v, beta, 0.0, 100).is_err());
    }

    #[test]
    fn ci_linear_width_example() {
        // ⟨a, v̂⟩ = 0.1 gives a projected variance of 0.99
        let (a, v) = unit_with_overlap(0.1);
        let ci = ci_linear_functional(&a, &v, 20.0, 400, 0.05).unwrap();
        let z = 1.959_963_984_540_054;
        let expected_half = z * 0.99f64.sqrt() / (20.0 * 20.0) / (1.0 - 1.0 / 800.0);
        assert!((0.5 * ci.width() - expected_half).abs() < 1e-15);
        assert!((0.5 * ci.width() - 0.004881).abs() < 1e-6);
        assert!((ci.center() - 0.1 / (1.0 - 1.0 / 800.0)).abs() < 1e-15);
        assert!((ci.level - 0.95).abs() < 1e-15);
    }

    #[test]
    fn ci_linear_huge_beta_collapses() {
        let (a, v) = unit_with_overlap(0.1);
        let ci = ci_linear_functional(&a, &v, 1e9, 400, 0.05).unwrap();
        assert!(ci.width() < 1e-9);
        assert!((ci.center() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ci_beta_example() {
        let ci = ci_beta(20.0, 3, 400, 0.05).unwrap();
        assert!((ci.center() - 20.025).abs() < 1e-12);
        assert!((ci.lo - 19.927).abs() < 1e-3 && (ci.hi - 20.123).abs() < 1e-3);
        assert!((0.5 * ci.width() - 1.959_963_984_540_054 / 20.0).abs() < 1e-12);
        let degenerate = ci_beta(20.0, 3, 400, 1.0).unwrap();
        assert_eq!(degenerate.lo, degenerate.hi);
        assert_eq!(degenerate.lo, 20.025);
    }

    #[test]
    fn ci_width_scaling() {
        let w1 = ci_beta(5.0, 3, 100, 0.05).unwrap().width();
        let w4 = ci_beta(5.0, 3, 400, 0.05).unwrap().width();
        assert!((w1 / w4 - 2.0).abs() < 1e-12);

        let (a, v) = unit_with_overlap(0.2);
        let base = ci_linear_functional(&a, &v, 10.0, 100, 0.1).unwrap().width();
        let w = ci_linear_functional(&a, &v, 20.0, 400, 0.1).unwrap().width();
        let shrink = |b: f64| 1.0 - 1.0 / (2.0 * b * b);
        assert!((base / w - 4.0 * shrink(20.0) / shrink(10.0)).abs() < 1e-12);
    }

    #[test]
    fn mixture_trivial_and_symmetric() {
        assert_eq!(mixture_weights(&[3.0], 3).unwrap().p, vec![1.0]);
        let p = mixture_weights(&[2.0, 2.0, 2.0], 3).unwrap().p;
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!(matches!(mixture_weights(&[1.0, 2.0], 2), Err(Error::UnsupportedOrder(2))));
        assert!(mixture_weights(&[1.0, 0.0], 3).is_err());
        assert!(mixture_weights(&[], 3).is_err());
    }

    #[test]
    fn mixture_two_spikes_closed_form() {
        let n: f64 = 600.0;
        let p = mixture_weights(&[n.sqrt(), 1.2 * n.sqrt()], 3).unwrap().p;
        let p1 = closed_form_two(1.0, 1.2, 3);
        assert!((p1 - 0.442_284_123).abs() < 1e-9);
        assert!((p[0] - p1).abs() < 1e-8);
        assert!((p[1] - (1.0 - p1)).abs() < 1e-8);
    }

    #[test]
    fn mixture_closed_form_over_random_ratios() {
        let mut s = derive_stream(&StreamKey::new(31, "ratios", 0));
        for k in [3usize, 4, 5] {
            for _ in 0..20 {
                // log-uniform on [0.1, 10]
                let ratio = 10f64.powf(2.0 * s.next_uniform() - 1.0);
                let p = mixture_weights(&[ratio, 1.0], k).unwrap().p;
                let exact = closed_form_two(ratio, 1.0, k);
                assert!((p[0] - exact).abs() < 1e-8, "k={k} ratio={ratio}: {} vs {exact}", p[0]);
                assert!((p[0] + p[1] - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn mixture_monte_carlo_agrees() {
        let betas = [1.0, 1.2];
        let q = mixture_weights(&betas, 3).unwrap().p;
        let mut s = derive_stream(&StreamKey::new(5, "mixture-mc", 0));
        let mc = mixture_weights_mc(&betas, 3, 200_000, &mut s).unwrap().p;
        for (a, b) in q.iter().zip(&mc) {
            assert!((a - b).abs() < 0.004);
        }
        assert_eq!(mc.iter().sum::<f64>(), 1.0);

        let mc4 = mixture_weights_mc(&[1.0; 4], 3, 100_000, &mut s).unwrap().p;
        assert!(mc4.iter().all(|p| (p - 0.25).abs() < 0.01));
        assert_eq!(mixture_weights_mc(&[2.0], 3, 10, &mut s).unwrap().p, vec![1.0]);
        assert!(mixture_weights_mc(&[2.0], 3, 0, &mut s).is_err());
    }

    #[test]
    fn adaptive_simpson_integrates_gaussian() {
        let f = |x: f64| (2.0 / PI).sqrt() * (-0.5 * x * x).exp();
        assert!((adaptive_simpson(&f, 0.0, 12.0, 1e-12) - 1.0).abs() < 1e-11);
        let g = |x: f64| x.sin();
        assert!((adaptive_simpson(&g, 0.0, PI, 1e-12) - 2.0).abs() < 1e-11);
    }
}
