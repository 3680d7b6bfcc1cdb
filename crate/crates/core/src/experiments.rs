//! Monte Carlo drivers.
//!
//! Every trial draws from its own stream keyed by `(seed, "trial", index)`: first
//! the noise seed, then the spike directions (unless fixed), then the start
//! vector. Trials run on the rayon pool and are collected by index, so the
//! table does not depend on the thread count or scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::inference::{
    ci_beta, ci_linear_functional, debias_beta, mixture_weights, normalized_beta_stat, normalized_linear_stat,
    Interval,
};
use crate::linalg::{argmax_abs, axpby, dot};
use crate::model::{build_model, BackendChoice, Spike, SpikedModel, DEFAULT_MEMORY_BUDGET};
use crate::power::{power_iterate, predicted_spike_index, IterationConfig, Status};
use crate::rng::{derive_stream, orthonormal_spikes, unit_sphere, RandomStream, StreamKey, UnitVector};
use crate::stats::{ks_distance, mean, normal_cdf, variance};

/// How the start vector `u0` is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Uniform on the sphere.
    Random,
    /// `u0 ∝ mix·v_target + (1 - mix)·w` with `w` uniform on the sphere;
    /// `mix = 0.5` gives `(v + w)/‖v + w‖`.
    Warm { target: usize, mix: f64 },
    /// `u0 = c·v_target + √(1 - c²)·w⊥` with `w⊥` a uniform unit vector orthogonal to `v_target`.
    Overlap { target: usize, overlap: f64 },
}

impl InitSpec {
    fn draw(&self, stream: &mut RandomStream, spikes: &[UnitVector]) -> Result<UnitVector> {
        let n = spikes[0].len();
        let w = unit_sphere(stream, n)?;
        match *self {
            InitSpec::Random => Ok(w),
            InitSpec::Warm { target, mix } => UnitVector::normalize(axpby(mix, &spikes[target], 1.0 - mix, &w)),
            InitSpec::Overlap { target, overlap } => {
                let v = &spikes[target];
                let perp = UnitVector::normalize(axpby(1.0, &w, -dot(&w, v), v))?;
                let rest = (1.0 - overlap * overlap).max(0.0).sqrt();
                UnitVector::normalize(axpby(overlap, v, rest, &perp))
            }
        }
    }

    fn target(&self) -> Option<usize> {
        match *self {
            InitSpec::Random => None,
            InitSpec::Warm { target, .. } | InitSpec::Overlap { target, .. } => Some(target),
        }
    }
}

/// The fixed direction `a` of the linear functional `⟨a, v⟩`.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionSpec {
    /// `(e_{n/3} + e_{2n/3} + e_n)/√3` with 1-based indices, `n/3` rounded down.
    Paper,
    /// 1-based `(index, weight)` pairs, normalized to unit length.
    Explicit(Vec<(usize, f64)>),
}

impl DirectionSpec {
    pub fn resolve(&self, n: usize) -> Result<UnitVector> {
        let pairs = match self {
            DirectionSpec::Paper => {
                if n < 3 {
                    return Err(invalid("the default direction needs n >= 3"));
                }
                vec![(n / 3, 1.0), (2 * n / 3, 1.0), (n, 1.0)]
            }
            DirectionSpec::Explicit(pairs) => pairs.clone(),
        };
        let mut a = vec![0.0; n];
        for (i, w) in pairs {
            if i < 1 || i > n {
                return Err(invalid(format!("direction index {i} outside 1..={n}")));
            }
            a[i - 1] += w;
        }
        UnitVector::normalize(a)
    }
}

/// Noise representation used for every trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Auto,
    Dense,
    Streaming,
    Zero,
}

impl NoiseMode {
    fn choice(self) -> BackendChoice {
        match self {
            NoiseMode::Auto => BackendChoice::Auto,
            NoiseMode::Dense => BackendChoice::Dense,
            NoiseMode::Streaming => BackendChoice::Streaming,
            NoiseMode::Zero => BackendChoice::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub betas: Vec<f64>,
    pub trials: usize,
    pub init: InitSpec,
    pub a_spec: DirectionSpec,
    pub alpha: f64,
    pub seed: u64,
    pub iteration: IterationConfig,
    /// Draw the spike directions once for all trials instead of per trial.
    pub fixed_spikes: bool,
    pub noise: NoiseMode,
    pub memory_budget: u64,
}

impl ExperimentConfig {
    /// A config with the default iteration budget for the given strengths.
    pub fn new(n: usize, k: usize, betas: Vec<f64>, trials: usize, seed: u64) -> Result<Self> {
        let beta_min = betas.iter().fold(f64::INFINITY, |m, b| m.min(b.abs()));
        let iteration = IterationConfig::default_for(beta_min, n, k, betas.len() > 1)?;
        Ok(Self {
            n,
            k,
            r: betas.len(),
            betas,
            trials,
            init: InitSpec::Random,
            a_spec: DirectionSpec::Paper,
            alpha: 0.05,
            seed,
            iteration,
            fixed_spikes: false,
            noise: NoiseMode::Auto,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.n < 1 {
            return bad("n must be positive".into());
        }
        if self.r < 1 || self.r > self.n {
            return bad(format!("need 1 <= r <= n, got r = {} with n = {}", self.r, self.n));
        }
        if self.betas.len() != self.r {
            return bad(format!("{} strengths given for r = {}", self.betas.len(), self.r));
        }
        if self.betas.iter().any(|b| *b == 0.0 || !b.is_finite()) {
            return bad("spike strengths must be finite and non-zero".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if let Some(t) = self.init.target() {
            if t >= self.r {
                return bad(format!("warm-start target {t} out of range for r = {}", self.r));
            }
        }
        match self.init {
            InitSpec::Warm { mix, .. } if !(mix > 0.0 && mix <= 1.0) => {
                return bad(format!("warm mix weight must lie in (0, 1], got {mix}"));
            }
            InitSpec::Overlap { overlap, .. } if !(-1.0..=1.0).contains(&overlap) => {
                return bad(format!("initial overlap must lie in [-1, 1], got {overlap}"));
            }
            _ => {}
        }
        self.iteration.validate()?;
        self.a_spec.resolve(self.n)?;
        Ok(())
    }

    fn dense_bytes(&self) -> u128 {
        match self.noise {
            NoiseMode::Zero | NoiseMode::Streaming => 0,
            _ => (self.n as u128)
                .checked_pow(self.k as u32)
                .map_or(u128::MAX, |l| l.saturating_mul(8)),
        }
    }

    /// Trials that may hold a materialized tensor at the same time.
    fn batch_size(&self) -> usize {
        let bytes = self.dense_bytes();
        let fit = match bytes {
            0 => usize::MAX,
            b if b > self.memory_budget as u128 => usize::MAX, // streaming fallback
            b => (self.memory_budget as u128 / b) as usize,
        };
        fit.max(1)
    }

    fn fixed_directions(&self) -> Result<Option<Vec<UnitVector>>> {
        if !self.fixed_spikes {
            return Ok(None);
        }
        let mut s = derive_stream(&StreamKey::new(self.seed, "spikes", 0));
        Ok(Some(orthonormal_spikes(&mut s, self.n, self.r)?))
    }
}

/// Inference quantities for a trial that reached a fixed point (or a 2-cycle).
///
/// `v̂` is flipped to agree with the spike it landed on and `β̂` flipped with it
/// (`β̂ → s^k β̂`), which leaves `X[v̂^{⊗k}]` unchanged. In that frame the
/// truths are `β_j` and `⟨a, v_j⟩` for every sign/parity case.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialInference {
    pub aligned_beta_hat: f64,
    pub debiased_beta: f64,
    pub beta_truth: f64,
    pub beta_stat: f64,
    pub ci_beta: Interval,
    pub covered_beta: bool,
    pub linear_estimate: f64,
    pub linear_truth: f64,
    pub linear_stat: f64,
    pub ci_linear: Interval,
    pub covered_linear: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub noise_seed: u64,
    pub init_overlaps: Vec<f64>,
    pub final_overlaps: Vec<f64>,
    pub predicted_index: usize,
    /// `argmax_j |⟨v̂, v_j⟩|`; `None` when the iteration did not converge.
    pub converged_index: Option<usize>,
    pub status: Status,
    pub iterations_used: usize,
    pub beta_hat: f64,
    pub inference: Option<TrialInference>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTable {
    pub r: usize,
    pub records: Vec<TrialRecord>,
}

fn fmt_opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl TrialTable {
    pub fn header(r: usize) -> Vec<String> {
        let mut h: Vec<String> = ["trial", "noise_seed", "status", "iterations", "predicted_index", "converged_index"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((0..r).map(|j| format!("init_overlap_{j}")));
        h.extend((0..r).map(|j| format!("final_overlap_{j}")));
        h.extend(
            [
                "beta_hat",
                "aligned_beta_hat",
                "debiased_beta",
                "beta_truth",
                "beta_stat",
                "ci_beta_lo",
                "ci_beta_hi",
                "covered_beta",
                "linear_estimate",
                "linear_truth",
                "linear_stat",
                "ci_linear_lo",
                "ci_linear_hi",
                "covered_linear",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        h
    }

    /// One row per trial. Floats use the shortest representation that parses
    /// back to the same value; fields of non-converged trials are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = Self::header(self.r).join(",");
        out.push('\n');
        for rec in &self.records {
            let mut row = vec![
                rec.trial_index.to_string(),
                rec.noise_seed.to_string(),
                rec.status.as_str().to_string(),
                rec.iterations_used.to_string(),
                rec.predicted_index.to_string(),
                fmt_opt(rec.converged_index),
            ];
            row.extend(rec.init_overlaps.iter().map(f64::to_string));
            row.extend(rec.final_overlaps.iter().map(f64::to_string));
            row.push(rec.beta_hat.to_string());
            let inf = rec.inference.as_ref();
            row.push(fmt_opt(inf.map(|i| i.aligned_beta_hat)));
            row.push(fmt_opt(inf.map(|i| i.debiased_beta)));
            row.push(fmt_opt(inf.map(|i| i.beta_truth)));
            row.push(fmt_opt(inf.map(|i| i.beta_stat)));
            row.push(fmt_opt(inf.map(|i| i.ci_beta.lo)));
            row.push(fmt_opt(inf.map(|i| i.ci_beta.hi)));
            row.push(fmt_opt(inf.map(|i| i.covered_beta)));
            row.push(fmt_opt(inf.map(|i| i.linear_estimate)));
            row.push(fmt_opt(inf.map(|i| i.linear_truth)));
            row.push(fmt_opt(inf.map(|i| i.linear_stat)));
            row.push(fmt_opt(inf.map(|i| i.ci_linear.lo)));
            row.push(fmt_opt(inf.map(|i| i.ci_linear.hi)));
            row.push(fmt_opt(inf.map(|i| i.covered_linear)));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn converged(&self) -> impl Iterator<Item = (&TrialRecord, &TrialInference)> {
        self.records.iter().filter_map(|r| r.inference.as_ref().map(|i| (r, i)))
    }

    pub fn not_converged(&self) -> usize {
        self.records.iter().filter(|r| r.inference.is_none()).count()
    }
}

fn make_spikes(betas: &[f64], dirs: &[UnitVector]) -> Vec<Spike> {
    betas.iter().zip(dirs).map(|(&b, d)| Spike::new(b, d.clone())).collect()
}

fn trial_inference(config: &ExperimentConfig, a: &UnitVector, dirs: &[UnitVector], j: usize, v_hat: &[f64], beta_hat: f64) -> Result<TrialInference> {
    let sign = if dot(v_hat, &dirs[j]) < 0.0 { -1.0 } else { 1.0 };
    let v_al: Vec<f64> = v_hat.iter().map(|x| sign * x).collect();
    let b_al = if config.k % 2 == 1 { sign * beta_hat } else { beta_hat };
    let beta_truth = config.betas[j];
    let linear_truth = dot(a, &dirs[j]);
    let ci_b = ci_beta(b_al, config.k, config.n, config.alpha)?;
    let ci_l = ci_linear_functional(a, &v_al, b_al, config.n, config.alpha)?;
    Ok(TrialInference {
        aligned_beta_hat: b_al,
        debiased_beta: debias_beta(b_al, config.k)?,
        beta_truth,
        beta_stat: normalized_beta_stat(b_al, beta_truth, config.k, config.n)?,
        ci_beta: ci_b,
        covered_beta: ci_b.contains(beta_truth),
        linear_estimate: dot(a, &v_al),
        linear_truth,
        linear_stat: normalized_linear_stat(a, &v_al, b_al, linear_truth, config.n)?,
        ci_linear: ci_l,
        covered_linear: ci_l.contains(linear_truth),
    })
}

fn run_trial(config: &ExperimentConfig, a: &UnitVector, fixed: Option<&[UnitVector]>, index: usize) -> Result<TrialRecord> {
    let mut s = derive_stream(&StreamKey::new(config.seed, "trial", index as u64));
    let noise_seed = s.next_u64();
    let dirs = match fixed {
        Some(f) => f.to_vec(),
        None => orthonormal_spikes(&mut s, config.n, config.r)?,
    };
    let u0 = config.init.draw(&mut s, &dirs)?;
    let model = build_model(
        config.n,
        config.k,
        make_spikes(&config.betas, &dirs),
        noise_seed,
        config.noise.choice(),
        config.memory_budget,
    )?;
    let result = power_iterate(&model, &u0, &config.iteration)?;
    drop(model);

    let init_overlaps: Vec<f64> = dirs.iter().map(|v| dot(&u0, v)).collect();
    let final_overlaps: Vec<f64> = dirs.iter().map(|v| dot(&result.v_hat, v)).collect();
    let predicted_index = predicted_spike_index(&config.betas, &u0, &dirs, config.k)?;
    let (converged_index, inference) = if result.status == Status::NotConverged {
        (None, None)
    } else {
        let j = argmax_abs(&final_overlaps).expect("at least one spike");
        let inf = trial_inference(config, a, &dirs, j, &result.v_hat, result.beta_hat)?;
        (Some(j), Some(inf))
    };
    Ok(TrialRecord {
        trial_index: index,
        noise_seed,
        init_overlaps,
        final_overlaps,
        predicted_index,
        converged_index,
        status: result.status,
        iterations_used: result.iterations_used,
        beta_hat: result.beta_hat,
        inference,
    })
}

/// Runs `f` over `0..count`, at most `batch` at a time, collecting by index.
fn par_indexed<T: Send, F>(count: usize, batch: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T> + Sync,
{
    let mut out = Vec::with_capacity(count);
    let mut start = 0;
    while start < count {
        let end = count.min(start.saturating_add(batch));
        let chunk: Result<Vec<T>> = (start..end).into_par_iter().map(&f).collect();
        out.extend(chunk?);
        start = end;
    }
    Ok(out)
}

/// Runs every trial of `config` and returns the full table.
pub fn run_trials(config: &ExperimentConfig) -> Result<TrialTable> {
    config.validate()?;
    let a = config.a_spec.resolve(config.n)?;
    let fixed = config.fixed_directions()?;
    let records = par_indexed(config.trials, config.batch_size(), |i| run_trial(config, &a, fixed.as_deref(), i))?;
    Ok(TrialTable { r: config.r, records })
}

fn ks_or_none(xs: &[f64]) -> Option<f64> {
    ks_distance(xs, normal_cdf).ok()
}

fn coverage_of(flags: impl Iterator<Item = bool>) -> Option<f64> {
    let (hit, total) = flags.fold((0usize, 0usize), |(h, t), c| (h + c as usize, t + 1));
    (total > 0).then(|| hit as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatSummary {
    pub count: usize,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub ks_distance: Option<f64>,
}

impl StatSummary {
    fn of(xs: &[f64]) -> Self {
        Self {
            count: xs.len(),
            mean: (!xs.is_empty()).then(|| mean(xs)),
            variance: (xs.len() > 1).then(|| variance(xs)),
            ks_distance: ks_or_none(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSummary {
    pub trials: usize,
    pub converged: usize,
    pub alternating: usize,
    pub not_converged: usize,
    pub beta_stat: StatSummary,
    pub linear_stat: StatSummary,
    pub coverage_beta: Option<f64>,
    pub coverage_linear: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CltReport {
    pub table: TrialTable,
    pub summary: CltSummary,
}

impl CltReport {
    pub fn beta_stats(&self) -> Vec<f64> {
        self.table.converged().map(|(_, i)| i.beta_stat).collect()
    }

    pub fn linear_stats(&self) -> Vec<f64> {
        self.table.converged().map(|(_, i)| i.linear_stat).collect()
    }
}

fn count_status(table: &TrialTable, s: Status) -> usize {
    table.records.iter().filter(|r| r.status == s).count()
}

/// Rank-one CLT study: the normalized `β̂` and `⟨a, v̂⟩` statistics per trial.
pub fn run_clt_experiment(config: &ExperimentConfig) -> Result<CltReport> {
    if config.r != 1 {
        return Err(Error::InvalidConfig(format!("the CLT experiment needs r = 1, got r = {}", config.r)));
    }
    let table = run_trials(config)?;
    let beta: Vec<f64> = table.converged().map(|(_, i)| i.beta_stat).collect();
    let linear: Vec<f64> = table.converged().map(|(_, i)| i.linear_stat).collect();
    let summary = CltSummary {
        trials: table.records.len(),
        converged: count_status(&table, Status::Converged),
        alternating: count_status(&table, Status::Alternating),
        not_converged: table.not_converged(),
        beta_stat: StatSummary::of(&beta),
        linear_stat: StatSummary::of(&linear),
        coverage_beta: coverage_of(table.converged().map(|(_, i)| i.covered_beta)),
        coverage_linear: coverage_of(table.converged().map(|(_, i)| i.covered_linear)),
    };
    Ok(CltReport { table, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeCoverage {
    pub spike: usize,
    pub trials_in_cluster: usize,
    pub coverage_beta: Option<f64>,
    pub coverage_linear: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageSummary {
    pub alpha: f64,
    pub nominal: f64,
    pub trials: usize,
    pub not_converged: usize,
    pub per_spike: Vec<SpikeCoverage>,
}

#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub table: TrialTable,
    pub summary: CoverageSummary,
}

/// Empirical coverage of both intervals, grouped by the spike each trial landed on.
pub fn coverage_summary(config: &ExperimentConfig, table: &TrialTable) -> CoverageSummary {
    let per_spike = (0..table.r)
        .map(|j| {
            let in_cluster = || table.converged().filter(move |(r, _)| r.converged_index == Some(j));
            SpikeCoverage {
                spike: j,
                trials_in_cluster: in_cluster().count(),
                coverage_beta: coverage_of(in_cluster().map(|(_, i)| i.covered_beta)),
                coverage_linear: coverage_of(in_cluster().map(|(_, i)| i.covered_linear)),
            }
        })
        .collect();
    CoverageSummary {
        alpha: config.alpha,
        nominal: 1.0 - config.alpha,
        trials: table.records.len(),
        not_converged: table.not_converged(),
        per_spike,
    }
}

pub fn run_coverage_experiment(config: &ExperimentConfig) -> Result<CoverageReport> {
    let table = run_trials(config)?;
    let summary = coverage_summary(config, &table);
    Ok(CoverageReport { table, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterStats {
    pub spike: usize,
    pub count: usize,
    pub beta_stat: StatSummary,
    pub linear_stat: StatSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureSummary {
    pub trials: usize,
    pub not_converged: usize,
    pub counts: Vec<usize>,
    /// Fraction of converged trials landing on each spike.
    pub p_hat: Vec<f64>,
    pub p_theory: Vec<f64>,
    /// Fraction of converged trials whose landing spike matches the
    /// initialization-based prediction.
    pub prediction_agreement: Option<f64>,
    pub clusters: Vec<ClusterStats>,
}

#[derive(Debug, Clone)]
pub struct MixtureReport {
    pub table: TrialTable,
    pub summary: MixtureSummary,
}

impl MixtureReport {
    /// `(beta_stat, linear_stat)` pairs of the trials that landed on `spike`.
    pub fn cluster_stats(&self, spike: usize) -> Vec<(f64, f64)> {
        self.table
            .converged()
            .filter(|(r, _)| r.converged_index == Some(spike))
            .map(|(_, i)| (i.beta_stat, i.linear_stat))
            .collect()
    }
}

pub fn check_mixture_config(config: &ExperimentConfig) -> Result<()> {
    if config.k == 2 {
        return Err(Error::UnsupportedOrder(2));
    }
    if config.r < 2 {
        return Err(Error::InvalidConfig(format!("the mixture experiment needs r >= 2, got r = {}", config.r)));
    }
    if config.init != InitSpec::Random {
        return Err(Error::InvalidConfig("the mixture experiment needs a random start".into()));
    }
    Ok(())
}

pub fn mixture_summary(config: &ExperimentConfig, table: &TrialTable) -> Result<MixtureSummary> {
    check_mixture_config(config)?;
    let mut counts = vec![0usize; table.r];
    for (rec, _) in table.converged() {
        counts[rec.converged_index.expect("converged")] += 1;
    }
    let converged: usize = counts.iter().sum();
    let p_hat = counts
        .iter()
        .map(|&c| if converged > 0 { c as f64 / converged as f64 } else { 0.0 })
        .collect();
    let agreement = coverage_of(table.converged().map(|(r, _)| r.converged_index == Some(r.predicted_index)));
    let clusters = (0..table.r)
        .map(|j| {
            let members: Vec<&TrialInference> =
                table.converged().filter(|(r, _)| r.converged_index == Some(j)).map(|(_, i)| i).collect();
            let b: Vec<f64> = members.iter().map(|i| i.beta_stat).collect();
            let l: Vec<f64> = members.iter().map(|i| i.linear_stat).collect();
            ClusterStats {
                spike: j,
                count: members.len(),
                beta_stat: StatSummary::of(&b),
                linear_stat: StatSummary::of(&l),
            }
        })
        .collect();
    Ok(MixtureSummary {
        trials: table.records.len(),
        not_converged: table.not_converged(),
        counts,
        p_hat,
        p_theory: mixture_weights(&config.betas, config.k)?.p,
        prediction_agreement: agreement,
        clusters,
    })
}

/// Rank-r study from random starts: which spike each trial lands on.
pub fn run_mixture_experiment(config: &ExperimentConfig) -> Result<MixtureReport> {
    check_mixture_config(config)?;
    let table = run_trials(config)?;
    let summary = mixture_summary(config, &table)?;
    Ok(MixtureReport { table, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Grid values are `β / n^{(k-2)/2}` with a uniform random start.
    Random,
    /// Grid values are `β⟨u0, v⟩` at the configured `β`.
    Warm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub grid: Vec<f64>,
    pub mode: SweepMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub grid: f64,
    pub beta: f64,
    /// Initial overlap `⟨u0, v⟩`; `None` for random starts.
    pub init_overlap: Option<f64>,
    pub mean_overlap: f64,
    pub stderr: f64,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub mode: SweepMode,
    pub trials: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid,mean_overlap,stderr\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.grid, row.mean_overlap, row.stderr));
        }
        out
    }
}

/// Mean `|⟨v̂, v⟩|` over the trials at each grid point.
///
/// Trial `i` uses the same noise, spike direction and start draw at every grid
/// point, so the noise tensor is built once per trial. Non-converged trials
/// count with their final iterate.
pub fn run_threshold_sweep(config: &ExperimentConfig, sweep: &SweepSpec) -> Result<SweepTable> {
    if sweep.grid.is_empty() {
        return Err(Error::InvalidConfig("the sweep grid is empty".into()));
    }
    if config.r != 1 {
        return Err(Error::InvalidConfig(format!("the threshold sweep needs r = 1, got r = {}", config.r)));
    }
    let scale = (config.n as f64).powf((config.k as f64 - 2.0) / 2.0);
    let points: Vec<(f64, Option<f64>)> = sweep
        .grid
        .iter()
        .map(|&g| match sweep.mode {
            SweepMode::Random => Ok((g * scale, None)),
            SweepMode::Warm => {
                let beta = config.betas[0];
                let c = g / beta;
                if !(-1.0..=1.0).contains(&c) {
                    return Err(Error::InvalidConfig(format!(
                        "grid value {g} needs initial overlap {c} at beta = {beta}"
                    )));
                }
                Ok((beta, Some(c)))
            }
        })
        .collect::<Result<_>>()?;
    if points.iter().any(|(b, _)| *b == 0.0 || !b.is_finite()) {
        return Err(Error::InvalidConfig("sweep strengths must be finite and non-zero".into()));
    }
    config.validate()?;
    let fixed = config.fixed_directions()?;

    let per_trial = par_indexed(config.trials, config.batch_size(), |i| {
        let mut s = derive_stream(&StreamKey::new(config.seed, "trial", i as u64));
        let noise_seed = s.next_u64();
        let dirs = match fixed.as_deref() {
            Some(f) => f.to_vec(),
            None => orthonormal_spikes(&mut s, config.n, 1)?,
        };
        let w = unit_sphere(&mut s, config.n)?;
        let mut model: Option<SpikedModel> = None;
        points
            .iter()
            .map(|&(beta, c)| {
                let spikes = make_spikes(&[beta], &dirs);
                let m = match model.take() {
                    Some(m) => m.with_spikes(spikes)?,
                    None => build_model(
                        config.n,
                        config.k,
                        spikes,
                        noise_seed,
                        config.noise.choice(),
                        config.memory_budget,
                    )?,
                };
                let u0 = match c {
                    None => w.clone(),
                    Some(c) => {
                        let v = &dirs[0];
                        let perp = UnitVector::normalize(axpby(1.0, &w, -dot(&w, v), v))?;
                        UnitVector::normalize(axpby(c, v, (1.0 - c * c).max(0.0).sqrt(), &perp))?
                    }
                };
                let res = power_iterate(&m, &u0, &config.iteration)?;
                model = Some(m);
                Ok((dot(&res.v_hat, &dirs[0]).abs(), res.status != Status::NotConverged))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let t = config.trials as f64;
    let rows = points
        .iter()
        .enumerate()
        .map(|(p, &(beta, c))| {
            let xs: Vec<f64> = per_trial.iter().map(|row| row[p].0).collect();
            let conv = per_trial.iter().filter(|row| row[p].1).count();
            let sd = if xs.len() > 1 { variance(&xs).sqrt() } else { 0.0 };
            SweepRow {
                grid: sweep.grid[p],
                beta,
                init_overlap: c,
                mean_overlap: mean(&xs),
                stderr: sd / t.sqrt(),
                converged_fraction: conv as f64 / t,
            }
        })
        .collect();
    Ok(SweepTable {
        mode: sweep.mode,
        trials: config.trials,
        rows,
    })
}
