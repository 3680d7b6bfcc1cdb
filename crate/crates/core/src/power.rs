//! Tensor power iteration `u_{t+1} = X[u_t^{⊗(k-1)}] / ‖X[u_t^{⊗(k-1)}]‖` and the
//! case analysis that predicts its limit.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm};
use crate::model::SpikedModel;
use crate::rng::UnitVector;

/// Tolerance on `‖u0‖ - 1` accepted by [`power_iterate`].
pub const INIT_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub t_max: usize,
    /// Stop once `1 - |⟨u_{t+1}, u_t⟩| < tol`.
    pub tol: f64,
    pub record_trajectory: bool,
}

impl IterationConfig {
    pub fn new(t_max: usize, tol: f64) -> Result<Self> {
        let cfg = Self {
            t_max,
            tol,
            record_trajectory: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `t_max = max(theory_iterations(eps = 0.1), 100)`, `tol = 1e-10`.
    pub fn default_for(beta_min_abs: f64, n: usize, k: usize, rank_r: bool) -> Result<Self> {
        let t = theory_iterations(beta_min_abs, n, k, 0.1, rank_r)?;
        Self::new(t.max(100), 1e-10)
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max < 1 {
            return Err(invalid("t_max must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(invalid(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    /// Even `k`, negative strength: the iterates flip sign every step.
    Alternating,
    NotConverged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Alternating => "alternating",
            Status::NotConverged => "not_converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub v_hat: UnitVector,
    pub beta_hat: f64,
    pub status: Status,
    /// Number of power updates performed.
    pub iterations_used: usize,
    /// `(t, ⟨u_{t+1}, u_t⟩)` when recording was requested.
    pub overlaps: Option<Vec<(usize, f64)>>,
}

/// One power update. `None` when the contraction vanishes.
pub fn power_step(model: &SpikedModel, u: &[f64]) -> Result<Option<UnitVector>> {
    let y = model.contract(u)?;
    let ny = norm(&y);
    if !ny.is_finite() {
        return Err(Error::Numerical { iteration: 0 });
    }
    if ny == 0.0 {
        return Ok(None);
    }
    Ok(Some(UnitVector::normalize(y)?))
}

pub fn power_iterate(model: &SpikedModel, u0: &[f64], config: &IterationConfig) -> Result<IterationResult> {
    config.validate()?;
    if u0.len() != model.n() {
        return Err(invalid(format!(
            "initial vector has length {}, model has n = {}",
            u0.len(),
            model.n()
        )));
    }
    let n0 = norm(u0);
    if (n0 - 1.0).abs() > INIT_NORM_TOL {
        return Err(invalid(format!("initial vector must be a unit vector, norm is {n0}")));
    }

    let mut trajectory = config.record_trajectory.then(Vec::new);
    // `current` is u_t, `prev` is u_{t-1}
    let mut prev: Option<UnitVector> = None;
    let mut current = UnitVector::checked(u0.to_vec(), INIT_NORM_TOL)?;
    let mut status = Status::NotConverged;
    let mut iterations = 0;

    for t in 0..config.t_max {
        let next = match power_step(model, &current) {
            Ok(Some(v)) => v,
            Ok(None) => break,
            Err(Error::Numerical { .. }) => return Err(Error::Numerical { iteration: t }),
            Err(e) => return Err(e),
        };
        iterations = t + 1;
        let lag1 = dot(&next, &current);
        if !lag1.is_finite() {
            return Err(Error::Numerical { iteration: t });
        }
        if let Some(tr) = trajectory.as_mut() {
            tr.push((t, lag1));
        }
        if lag1 > 0.0 && 1.0 - lag1 < config.tol {
            current = next;
            status = Status::Converged;
            break;
        }
        let lag2 = prev.as_ref().map(|p| dot(&next, p));
        if model.k().is_multiple_of(2) && lag1 < 0.0 && lag2.is_some_and(|c| c > 1.0 - config.tol) {
            status = Status::Alternating;
            // report the even-indexed member of the pair (u_t, u_{t+1})
            if t % 2 == 1 {
                current = next;
            }
            break;
        }
        prev = Some(std::mem::replace(&mut current, next));
    }

    let beta_hat = model.rayleigh(&current)?;
    if !beta_hat.is_finite() {
        return Err(Error::Numerical { iteration: iterations });
    }
    Ok(IterationResult {
        v_hat: current,
        beta_hat,
        status,
        iterations_used: iterations,
        overlaps: trajectory,
    })
}

/// Smallest integer `T ≥ 1 + (1/ε)(1/2 + 2 log|β| / log n)`, plus
/// `log log(√n |β|) / log(k-1)` for the rank-r bound.
///
/// For `k = 2` the rank-r term has a zero denominator and is dropped; it is also
/// clamped at zero when `√n |β| ≤ e`.
pub fn theory_iterations(beta_min_abs: f64, n: usize, k: usize, eps: f64, rank_r: bool) -> Result<usize> {
    if k < 2 {
        return Err(invalid(format!("tensor order must be at least 2, got {k}")));
    }
    if !(beta_min_abs > 0.0) || n < 2 || !(eps > 0.0) {
        return Err(invalid("theory_iterations needs beta > 0, n >= 2, eps > 0"));
    }
    let ln_n = (n as f64).ln();
    let mut bound = 1.0 + (0.5 + 2.0 * beta_min_abs.ln() / ln_n) / eps;
    if rank_r && k > 2 {
        let inner = ((n as f64).sqrt() * beta_min_abs).ln();
        if inner > 1.0 {
            bound += inner.ln() / ((k - 1) as f64).ln();
        }
    }
    // absorb rounding in the logs so exact integers are not pushed up by one
    let t = (bound - 1e-9).ceil();
    Ok(t.max(1.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedLimit {
    /// Limit of the Rayleigh quotient along the iterates.
    pub beta_limit: f64,
    /// Sign of the limiting direction relative to the spike (even steps when alternating).
    pub v_sign: f64,
    pub alternating: bool,
}

/// The four parity/sign cases for the limit of power iteration.
pub fn classify_expected_limit(k: usize, beta: f64, init_overlap_sign: f64) -> Result<ExpectedLimit> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(invalid("spike strength must be non-zero"));
    }
    let init_sign = if init_overlap_sign < 0.0 { -1.0 } else { 1.0 };
    let odd = k % 2 == 1;
    Ok(match (odd, beta > 0.0) {
        (true, true) => ExpectedLimit {
            beta_limit: beta,
            v_sign: 1.0,
            alternating: false,
        },
        (true, false) => ExpectedLimit {
            beta_limit: -beta,
            v_sign: -1.0,
            alternating: false,
        },
        (false, true) => ExpectedLimit {
            beta_limit: beta,
            v_sign: init_sign,
            alternating: false,
        },
        (false, false) => ExpectedLimit {
            beta_limit: beta,
            v_sign: init_sign,
            alternating: true,
        },
    })
}

/// `argmax_j |β_j ⟨u0, v_j⟩^{k-2}|`, lowest index on ties. For `k = 2` this is
/// `argmax_j |β_j|`.
pub fn predicted_spike_index(betas: &[f64], u0: &[f64], spikes: &[UnitVector], k: usize) -> Result<usize> {
    if betas.is_empty() || spikes.is_empty() {
        return Err(invalid("predicted_spike_index needs at least one spike"));
    }
    if betas.len() != spikes.len() {
        return Err(invalid("betas and spikes differ in length"));
    }
    if k < 2 {
        return Err(invalid(format!("tensor order must be at least 2, got {k}")));
    }
    let scores: Vec<f64> = betas
        .iter()
        .zip(spikes)
        .map(|(b, v)| b * dot(u0, v).powi(k as i32 - 2))
        .collect();
    Ok(crate::linalg::argmax_abs(&scores).expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, BackendChoice, Spike, DEFAULT_MEMORY_BUDGET};
    use crate::rng::{derive_stream, unit_sphere, StreamKey};

    fn zero_noise(n: usize, k: usize, beta: f64) -> SpikedModel {
        build_model(n, k, vec![Spike::new(beta, UnitVector::basis(n, 0))], 0, BackendChoice::Zero, 1 << 20).unwrap()
    }

    fn warm_start(n: usize) -> Vec<f64> {
        let mut u = vec![0.3; n];
        u[0] = 1.0;
        UnitVector::normalize(u).unwrap().into_inner()
    }

    #[test]
    fn theory_iteration_examples() {
        let n = 400;
        let b = (n as f64).sqrt();
        assert_eq!(theory_iterations(b, n, 3, 0.1, false).unwrap(), 16);
        assert_eq!(theory_iterations(b, n, 3, 0.5, false).unwrap(), 4);
        assert_eq!(theory_iterations(24.495, 600, 3, 0.1, true).unwrap(), 19);
        assert!(theory_iterations(b, n, 1, 0.1, false).is_err());
    }

    #[test]
    fn classify_cases() {
        let c1 = classify_expected_limit(3, 5.0, 1.0).unwrap();
        assert_eq!((c1.beta_limit, c1.v_sign, c1.alternating), (5.0, 1.0, false));
        let c2 = classify_expected_limit(3, -5.0, 1.0).unwrap();
        assert_eq!((c2.beta_limit, c2.v_sign, c2.alternating), (5.0, -1.0, false));
        let c3 = classify_expected_limit(4, 5.0, -1.0).unwrap();
        assert_eq!((c3.beta_limit, c3.v_sign, c3.alternating), (5.0, -1.0, false));
        let c4 = classify_expected_limit(4, -5.0, 1.0).unwrap();
        assert!(c4.alternating);
        assert_eq!(c4.beta_limit, -5.0);
        assert!(classify_expected_limit(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn predicted_index_examples() {
        let n = 4;
        let v = vec![UnitVector::basis(n, 0), UnitVector::basis(n, 1)];
        let u = [0.1, 0.2, 0.0, (1.0f64 - 0.05).sqrt()];
        assert_eq!(predicted_spike_index(&[10.0, 2.0], &u, &v, 3).unwrap(), 0);
        let u = [0.1, 0.3, 0.0, (1.0f64 - 0.1).sqrt()];
        assert_eq!(predicted_spike_index(&[1.0, 1.0], &u, &v, 3).unwrap(), 1);
        assert_eq!(predicted_spike_index(&[3.0, 5.0], &[0.9, 0.1, 0.0, 0.0], &v, 2).unwrap(), 1);
        assert_eq!(predicted_spike_index(&[2.0, 2.0], &[0.5, 0.5, 0.0, 0.0], &v, 3).unwrap(), 0);
        assert!(predicted_spike_index(&[], &u, &[], 3).is_err());
    }

    #[test]
    fn zero_noise_odd_positive_converges_in_one_step() {
        let m = zero_noise(6, 3, 1.0);
        let cfg = IterationConfig::new(50, 1e-10).unwrap().with_trajectory();
        let u0 = warm_start(6);
        let u1 = power_step(&m, &u0).unwrap().unwrap();
        assert!((u1[0] - 1.0).abs() < 1e-15 && u1[1..].iter().all(|&x| x == 0.0));
        let r = power_iterate(&m, &u0, &cfg).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.beta_hat, 1.0);
        assert!((r.v_hat[0] - 1.0).abs() < 1e-15);
        // u_1 = v already; the second update only confirms it
        let traj = r.overlaps.unwrap();
        assert_eq!(traj.len(), 2);
        assert!((traj[1].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_odd_negative_flips() {
        let m = zero_noise(5, 3, -2.0);
        let r = power_iterate(&m, &warm_start(5), &IterationConfig::new(50, 1e-10).unwrap()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!((r.v_hat[0] + 1.0).abs() < 1e-15);
        assert!((r.beta_hat - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_noise_even_positive_keeps_sign() {
        let m = zero_noise(5, 4, 2.0);
        let u0: Vec<f64> = warm_start(5).iter().map(|x| -x).collect();
        let r = power_iterate(&m, &u0, &IterationConfig::new(50, 1e-10).unwrap()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!((r.v_hat[0] + 1.0).abs() < 1e-15);
        assert!((r.beta_hat - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_noise_even_negative_alternates() {
        let m = zero_noise(5, 4, -1.0);
        let u0 = warm_start(5);
        let r = power_iterate(&m, &u0, &IterationConfig::new(50, 1e-10).unwrap().with_trajectory()).unwrap();
        assert_eq!(r.status, Status::Alternating);
        assert!((r.v_hat[0].abs() - 1.0).abs() < 1e-15);
        // even steps carry sgn⟨u0, v⟩ v
        assert!(r.v_hat[0] > 0.0);
        assert!((r.beta_hat + 1.0).abs() < 1e-14);
        let traj = r.overlaps.unwrap();
        assert!(traj.last().unwrap().1 < 0.0);
    }

    #[test]
    fn zero_contraction_is_not_converged() {
        let m = zero_noise(4, 3, 1.0);
        let u0 = UnitVector::basis(4, 2);
        let r = power_iterate(&m, &u0, &IterationConfig::new(10, 1e-10).unwrap()).unwrap();
        assert_eq!(r.status, Status::NotConverged);
        assert_eq!(r.iterations_used, 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = zero_noise(4, 3, 1.0);
        let cfg = IterationConfig::new(10, 1e-10).unwrap();
        assert!(power_iterate(&m, &[1.0, 1.0, 0.0, 0.0], &cfg).is_err());
        assert!(power_iterate(&m, &[1.0, 0.0], &cfg).is_err());
        assert!(IterationConfig::new(0, 1e-10).is_err());
        assert!(IterationConfig::new(10, 1.5).is_err());
    }

    #[test]
    fn non_finite_noise_reports_iteration() {
        let n = 3;
        let mut noise = vec![0.0; n * n * n];
        noise[0] = f64::INFINITY;
        let m = build_model(n, 3, vec![Spike::new(1.0, UnitVector::basis(n, 0))], 0, BackendChoice::Injected(noise), 1 << 20)
            .unwrap();
        let err = power_iterate(&m, &UnitVector::basis(n, 0), &IterationConfig::new(5, 1e-10).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Numerical { iteration: 0 }));
    }

    #[test]
    fn strong_spike_recovered_under_noise() {
        let n = 50;
        let mut s = derive_stream(&StreamKey::new(11, "spikes", 0));
        let v = unit_sphere(&mut s, n).unwrap();
        let w = unit_sphere(&mut s, n).unwrap();
        let u0 = UnitVector::normalize(crate::linalg::axpby(1.0, &v, 1.0, &w)).unwrap();
        assert!((dot(&u0, &v) - 0.7).abs() < 0.15);
        let m = build_model(n, 3, vec![Spike::new(30.0, v.clone())], 11, BackendChoice::Dense, DEFAULT_MEMORY_BUDGET).unwrap();
        let r = power_iterate(&m, &u0, &IterationConfig::default_for(30.0, n, 3, false).unwrap()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(dot(&r.v_hat, &v).abs() >= 0.995);
        assert!((crate::linalg::norm(&r.v_hat) - 1.0).abs() < 1e-10);
    }
}
