//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use spiked_tensor::model::{build_model, BackendChoice, Spike, SpikedModel, DEFAULT_MEMORY_BUDGET};
use spiked_tensor::rng::{derive_stream, orthonormal_spikes, unit_sphere, StreamKey, UnitVector};

/// `X[u^{⊗(k-1)}]` by explicit loops over every multi-index of a row-major array.
pub fn brute_contract(x: &[f64], n: usize, k: usize, u: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    let mut idx = vec![0usize; k];
    for (flat, &value) in x.iter().enumerate() {
        let mut rem = flat;
        for s in (0..k).rev() {
            idx[s] = rem % n;
            rem /= n;
        }
        let mut w = value;
        for &i in &idx[1..] {
            w *= u[i];
        }
        y[idx[0]] += w;
    }
    y
}

pub fn brute_rayleigh(x: &[f64], n: usize, k: usize, u: &[f64]) -> f64 {
    brute_contract(x, n, k, u).iter().zip(u).map(|(a, b)| a * b).sum()
}

/// `max_i |a_i - b_i| / max_i |b_i|`, with the denominator floored at 1e-300.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn rel_err_scalar(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Applies the `n×n` matrix `q` (rows) along mode `m` of a row-major order-`k` tensor.
pub fn mode_product(x: &[f64], n: usize, k: usize, m: usize, q: &[Vec<f64>]) -> Vec<f64> {
    let stride = n.pow((k - 1 - m) as u32);
    let outer = n.pow(m as u32);
    let mut out = vec![0.0; x.len()];
    for o in 0..outer {
        let base = o * n * stride;
        for i in 0..n {
            for inner in 0..stride {
                let mut s = 0.0;
                for j in 0..n {
                    s += q[i][j] * x[base + j * stride + inner];
                }
                out[base + i * stride + inner] = s;
            }
        }
    }
    out
}

pub fn mat_vec(q: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    q.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// A random orthogonal matrix, stored as its rows.
pub fn random_orthogonal(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = derive_stream(&StreamKey::new(seed, "rotation", 0));
    orthonormal_spikes(&mut s, n, n)
        .unwrap()
        .into_iter()
        .map(UnitVector::into_inner)
        .collect()
}

pub fn random_spikes(n: usize, r: usize, seed: u64) -> Vec<Spike> {
    let mut s = derive_stream(&StreamKey::new(seed, "test-spikes", 0));
    let dirs = orthonormal_spikes(&mut s, n, r).unwrap();
    dirs.into_iter()
        .map(|d| Spike::new(8.0 * s.next_standard_normal(), d))
        .collect()
}

pub fn random_unit(n: usize, seed: u64, index: u64) -> UnitVector {
    let mut s = derive_stream(&StreamKey::new(seed, "test-u", index));
    unit_sphere(&mut s, n).unwrap()
}

pub fn model(n: usize, k: usize, spikes: Vec<Spike>, seed: u64, backend: BackendChoice) -> SpikedModel {
    build_model(n, k, spikes, seed, backend, DEFAULT_MEMORY_BUDGET).unwrap()
}

/// Checks Dense, Streaming and the brute-force oracle on `inputs` random vectors.
/// Returns the worst relative error seen for contract and rayleigh.
pub fn backend_agreement(n: usize, k: usize, seed: u64, inputs: u64) -> (f64, f64) {
    let r = n.min(3);
    let spikes = random_spikes(n, r, seed);
    let dense = model(n, k, spikes.clone(), seed, BackendChoice::Dense);
    let streaming = model(n, k, spikes, seed, BackendChoice::Streaming);
    let oracle = dense.materialize_dense_oracle().unwrap();
    let (mut worst_c, mut worst_r) = (0.0f64, 0.0f64);
    for i in 0..inputs {
        let u = random_unit(n, seed, i);
        let truth = brute_contract(&oracle, n, k, &u);
        let d = dense.contract(&u).unwrap();
        let s = streaming.contract(&u).unwrap();
        worst_c = worst_c.max(rel_err(&d, &truth)).max(rel_err(&s, &truth)).max(rel_err(&d, &s));
        let rt = brute_rayleigh(&oracle, n, k, &u);
        worst_r = worst_r
            .max(rel_err_scalar(dense.rayleigh(&u).unwrap(), rt))
            .max(rel_err_scalar(streaming.rayleigh(&u).unwrap(), rt));
    }
    (worst_c, worst_r)
}

/// Worst `‖contract(X', Qu) - Q contract(X, u)‖` relative error, where `X'` has
/// every spike and every noise mode rotated by a random orthogonal `Q`.
pub fn rotation_error(n: usize, k: usize, seed: u64, inputs: u64) -> f64 {
    let len = n.pow(k as u32);
    let mut s = derive_stream(&StreamKey::new(seed, "test-noise", 0));
    let noise: Vec<f64> = s.gaussian(len, 1.0 / n as f64).unwrap();
    let q = random_orthogonal(n, seed);
    let mut rotated = noise.clone();
    for m in 0..k {
        rotated = mode_product(&rotated, n, k, m, &q);
    }
    let spikes = random_spikes(n, n.min(2), seed);
    let rotated_spikes = spikes
        .iter()
        .map(|sp| Spike::new(sp.beta, UnitVector::normalize(mat_vec(&q, &sp.direction)).unwrap()))
        .collect();
    let base = model(n, k, spikes, seed, BackendChoice::Injected(noise));
    let turned = model(n, k, rotated_spikes, seed, BackendChoice::Injected(rotated));
    let mut worst = 0.0f64;
    for i in 0..inputs {
        let u = random_unit(n, seed, i);
        let expected = mat_vec(&q, &base.contract(&u).unwrap());
        let got = turned.contract(&mat_vec(&q, &u)).unwrap();
        worst = worst.max(rel_err(&got, &expected));
    }
    worst
}
