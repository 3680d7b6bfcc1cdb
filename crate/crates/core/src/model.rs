//! The spiked tensor `X = Σ_j β_j v_j^{⊗k} + Z` and its contraction kernel.
//!
//! The low-rank part is never expanded: contracting it against `u^{⊗(k-1)}`
//! costs `r` inner products. The noise part `Z` lives behind a [`NoiseBackend`]:
//! a materialized array, on-demand regeneration from the noise seed, nothing,
//! or an explicit array supplied by the caller.
//!
//! Entries are stored row-major over `(i_0, …, i_{k-1})` and the contraction
//! keeps mode 0 free, so `X[u^{⊗(k-1)}](i) = Σ X[i, i_1, …, i_{k-1}] u_{i_1}⋯u_{i_{k-1}}`.
//! The noise is i.i.d. and not symmetrized, so the choice of free mode matters;
//! `rayleigh` uses the same convention.
//!
//! For each output index the noise sum is reduced one mode at a time, starting
//! from the contiguous last mode, always in the same order. Dense and streaming
//! backends run the identical arithmetic on identical entries, so they agree
//! bit for bit, and parallelism across output indices cannot change the result.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::dot;
use crate::rng::{NoiseSource, UnitVector};

/// Default ceiling for a materialized noise array.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

/// Largest flat length `materialize_dense_oracle` will build.
pub const ORACLE_MAX_ENTRIES: u128 = 10_000_000;

const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Spike {
    pub beta: f64,
    pub direction: UnitVector,
}

impl Spike {
    pub fn new(beta: f64, direction: UnitVector) -> Self {
        Self { beta, direction }
    }
}

/// Requested noise representation.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendChoice {
    /// Dense when `n^k · 8` bytes fit the memory budget, otherwise streaming.
    Auto,
    Dense,
    Streaming,
    Zero,
    /// Explicit row-major array of length `n^k`.
    Injected(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Dense,
    Streaming,
    Zero,
    Injected,
}

#[derive(Debug, Clone)]
pub enum NoiseBackend {
    Dense(Vec<f64>),
    Streaming,
    Zero,
    Injected(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SpikedModel {
    n: usize,
    k: usize,
    spikes: Vec<Spike>,
    noise_seed: u64,
    backend: NoiseBackend,
}

fn flat_len(n: usize, k: usize) -> Option<u128> {
    (n as u128).checked_pow(k as u32)
}

fn validate_spikes(n: usize, spikes: &[Spike]) -> Result<()> {
    if spikes.is_empty() || spikes.len() > n {
        return Err(Error::ModelInvariant(format!(
            "need 1 <= r <= n spikes, got r = {} with n = {n}",
            spikes.len()
        )));
    }
    for (j, s) in spikes.iter().enumerate() {
        if s.direction.len() != n {
            return Err(invalid(format!(
                "spike {j} has length {} but n = {n}",
                s.direction.len()
            )));
        }
        if !s.beta.is_finite() {
            return Err(invalid(format!("spike {j} has non-finite strength")));
        }
        let norm = crate::linalg::norm(&s.direction);
        if (norm - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::ModelInvariant(format!("spike {j} has norm {norm}")));
        }
        for (l, t) in spikes[..j].iter().enumerate() {
            let c = dot(&s.direction, &t.direction);
            if c.abs() > ORTHONORMAL_TOL {
                return Err(Error::ModelInvariant(format!(
                    "spikes {l} and {j} are not orthogonal: inner product {c}"
                )));
            }
        }
    }
    Ok(())
}

/// Validates the parameters and materializes the noise if a dense backend is chosen.
pub fn build_model(
    n: usize,
    k: usize,
    spikes: Vec<Spike>,
    noise_seed: u64,
    backend: BackendChoice,
    memory_budget_bytes: u64,
) -> Result<SpikedModel> {
    if n < 1 {
        return Err(invalid("dimension n must be positive"));
    }
    if k < 2 {
        return Err(invalid(format!("tensor order must be at least 2, got {k}")));
    }
    validate_spikes(n, &spikes)?;

    let len = flat_len(n, k);
    let dense_bytes = len.map(|l| l.saturating_mul(8)).unwrap_or(u128::MAX);
    let fits = dense_bytes <= memory_budget_bytes as u128 && dense_bytes <= usize::MAX as u128;

    let backend = match backend {
        BackendChoice::Zero => NoiseBackend::Zero,
        BackendChoice::Streaming => NoiseBackend::Streaming,
        BackendChoice::Auto if !fits => NoiseBackend::Streaming,
        BackendChoice::Auto | BackendChoice::Dense => {
            if !fits {
                return Err(Error::Resource {
                    what: "dense noise tensor",
                    required_bytes: dense_bytes,
                    budget_bytes: memory_budget_bytes as u128,
                });
            }
            NoiseBackend::Dense(materialize_noise(noise_seed, n, k))
        }
        BackendChoice::Injected(values) => {
            if len != Some(values.len() as u128) {
                return Err(invalid(format!(
                    "injected noise has {} entries, expected n^k = {n}^{k}",
                    values.len()
                )));
            }
            NoiseBackend::Injected(values)
        }
    };

    Ok(SpikedModel {
        n,
        k,
        spikes,
        noise_seed,
        backend,
    })
}

fn materialize_noise(noise_seed: u64, n: usize, k: usize) -> Vec<f64> {
    let slab = n.pow(k as u32 - 1);
    let mut values = vec![0.0; slab * n];
    let source = NoiseSource::new(noise_seed, n);
    values
        .par_chunks_mut(slab)
        .enumerate()
        .for_each_with(source, |src, (i, chunk)| src.fill((i * slab) as u64, chunk));
    values
}

/// Folds the remaining `folds` modes of one output slab. `level` holds the fibre
/// dot products of the last mode, row-major over the other contracted modes.
fn fold_modes(mut level: Vec<f64>, u: &[f64], folds: usize, scratch: &mut Vec<f64>) -> f64 {
    let n = u.len();
    for _ in 0..folds {
        scratch.clear();
        scratch.extend(level.chunks_exact(n).map(|c| dot(c, u)));
        std::mem::swap(&mut level, scratch);
    }
    level[0]
}

impl SpikedModel {
    /// Swaps in a new low-rank part while keeping the noise, so sweeps over
    /// spike strengths can reuse one materialized tensor.
    pub fn with_spikes(mut self, spikes: Vec<Spike>) -> Result<Self> {
        validate_spikes(self.n, &spikes)?;
        self.spikes = spikes;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rank(&self) -> usize {
        self.spikes.len()
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }

    pub fn backend_kind(&self) -> BackendKind {
        match self.backend {
            NoiseBackend::Dense(_) => BackendKind::Dense,
            NoiseBackend::Streaming => BackendKind::Streaming,
            NoiseBackend::Zero => BackendKind::Zero,
            NoiseBackend::Injected(_) => BackendKind::Injected,
        }
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n {
            return Err(invalid(format!(
                "input has length {} but the model has n = {}",
                u.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// `X[u^{⊗(k-1)}]`. `u` need not have unit norm.
    pub fn contract(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let n = self.n;
        let modes = self.k - 1;
        let slab = n.pow(modes as u32);

        let mut y: Vec<f64> = match &self.backend {
            NoiseBackend::Zero => vec![0.0; n],
            NoiseBackend::Dense(values) | NoiseBackend::Injected(values) => values
                .par_chunks_exact(slab)
                .map_init(Vec::new, |scratch, s| {
                    let level = s.chunks_exact(n).map(|f| dot(f, u)).collect();
                    fold_modes(level, u, modes - 1, scratch)
                })
                .collect(),
            NoiseBackend::Streaming => {
                let source = NoiseSource::new(self.noise_seed, n);
                (0..n)
                    .into_par_iter()
                    .map_init(
                        || (source.clone(), vec![0.0; n], Vec::new()),
                        |(src, buf, scratch), i| {
                            let base = (i * slab) as u64;
                            let level = (0..slab / n)
                                .map(|j| {
                                    src.fill(base + (j * n) as u64, buf);
                                    dot(buf, u)
                                })
                                .collect();
                            fold_modes(level, u, modes - 1, scratch)
                        },
                    )
                    .collect()
            }
        };

        for spike in &self.spikes {
            let c = spike.beta * dot(u, &spike.direction).powi(modes as i32);
            y.iter_mut()
                .zip(spike.direction.iter())
                .for_each(|(yi, vi)| *yi += c * vi);
        }
        Ok(y)
    }

    /// `⟨X, u^{⊗k}⟩ = ⟨u, X[u^{⊗(k-1)}]⟩`.
    pub fn rayleigh(&self, u: &[f64]) -> Result<f64> {
        let y = self.contract(u)?;
        Ok(dot(u, &y))
    }

    /// The noise entry at a row-major flat index.
    pub fn noise_at(&self, flat_index: usize) -> f64 {
        match &self.backend {
            NoiseBackend::Zero => 0.0,
            NoiseBackend::Dense(v) | NoiseBackend::Injected(v) => v[flat_index],
            NoiseBackend::Streaming => {
                let mut out = [0.0];
                NoiseSource::new(self.noise_seed, self.n).fill(flat_index as u64, &mut out);
                out[0]
            }
        }
    }

    /// The full tensor `X` as a row-major array. Test-scale only.
    pub fn materialize_dense_oracle(&self) -> Result<Vec<f64>> {
        let len = flat_len(self.n, self.k).unwrap_or(u128::MAX);
        if len > ORACLE_MAX_ENTRIES {
            return Err(Error::Resource {
                what: "dense oracle tensor",
                required_bytes: len.saturating_mul(8),
                budget_bytes: ORACLE_MAX_ENTRIES * 8,
            });
        }
        let (n, k) = (self.n, self.k);
        let mut index = vec![0usize; k];
        let mut out = Vec::with_capacity(len as usize);
        for flat in 0..len as usize {
            let mut rem = flat;
            for s in (0..k).rev() {
                index[s] = rem % n;
                rem /= n;
            }
            let signal: f64 = self
                .spikes
                .iter()
                .map(|sp| sp.beta * index.iter().map(|&i| sp.direction[i]).product::<f64>())
                .sum();
            out.push(signal + self.noise_at(flat));
        }
        Ok(out)
    }
}
