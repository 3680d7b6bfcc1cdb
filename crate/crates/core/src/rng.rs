//! Counter-based random streams.
//!
//! Every random quantity in the crate is a pure function of a [`StreamKey`] and a
//! position in the stream. The block function is Philox4x32-10: the key's
//! `(master_seed, label)` pair is hashed into the 64-bit Philox key, and the
//! key's `index` occupies the upper half of the 128-bit counter. The lower half
//! is the block number, so a stream can jump to any position in O(1). That is
//! what lets the streaming noise backend regenerate tensor entries on demand.
//!
//! Uniform doubles are `((w >> 11) + 0.5) · 2⁻⁵³` for a 64-bit word `w`, which
//! lands strictly inside (0, 1). Gaussians are the AS 241 inverse normal CDF
//! applied to one such uniform. No platform math library is involved, so the
//! streams are bit-identical everywhere.

use crate::error::{invalid, Result};
use crate::stats::{ppnd16, ppnd16_central};

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one independent stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub label: String,
    pub index: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, label: impl Into<String>, index: u64) -> Self {
        Self {
            master_seed,
            label: label.into(),
            index,
        }
    }

    fn philox_key(&self) -> [u32; 2] {
        let mut h = splitmix64(self.master_seed);
        for chunk in self.label.as_bytes().chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            h = splitmix64(h ^ u64::from_le_bytes(word));
        }
        h = splitmix64(h ^ self.label.len() as u64);
        [h as u32, (h >> 32) as u32]
    }
}

/// A position-addressable stream of 64-bit words.
#[derive(Debug, Clone)]
pub struct RandomStream {
    key: [u32; 2],
    index: [u32; 2],
    /// index of the next word to emit
    position: u64,
    block: [u32; 4],
    block_id: u64,
}

pub fn derive_stream(key: &StreamKey) -> RandomStream {
    RandomStream {
        key: key.philox_key(),
        index: [key.index as u32, (key.index >> 32) as u32],
        position: 0,
        block: [0; 4],
        block_id: u64::MAX,
    }
}

impl RandomStream {
    #[inline]
    fn load_block(&mut self, block_id: u64) {
        if self.block_id != block_id {
            let ctr = [block_id as u32, (block_id >> 32) as u32, self.index[0], self.index[1]];
            self.block = philox4x32_10(ctr, self.key);
            self.block_id = block_id;
        }
    }

    /// Word at an absolute position, without moving the cursor.
    #[inline]
    pub fn word_at(&mut self, position: u64) -> u64 {
        self.load_block(position >> 1);
        let lane = (position & 1) as usize * 2;
        self.block[lane] as u64 | ((self.block[lane + 1] as u64) << 32)
    }

    pub fn seek(&mut self, position: u64) {
        self.position = position;
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let w = self.word_at(self.position);
        self.position += 1;
        w
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        word_to_uniform(self.next_u64())
    }

    #[inline]
    pub fn next_standard_normal(&mut self) -> f64 {
        ppnd16(self.next_uniform())
    }

    /// `count` i.i.d. draws from N(0, variance).
    pub fn gaussian(&mut self, count: usize, variance: f64) -> Result<Vec<f64>> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(invalid(format!("variance must be positive, got {variance}")));
        }
        let sd = variance.sqrt();
        Ok((0..count).map(|_| sd * self.next_standard_normal()).collect())
    }

    /// Writes standard normals for positions `start..start + out.len()`, scaled by
    /// `scale`. Leaves the cursor untouched.
    ///
    /// Values equal `scale * ppnd16(uniform)` exactly; the batch form only avoids
    /// per-word branching.
    pub fn fill_scaled_normals(&mut self, start: u64, scale: f64, out: &mut [f64]) {
        const BATCH: usize = 256;
        let mut uniforms = [0.0f64; BATCH];
        let mut tails = [0u16; BATCH];
        let mut pos = start;
        for chunk in out.chunks_mut(BATCH) {
            let u = &mut uniforms[..chunk.len()];
            let mut filled = 0;
            if pos & 1 == 1 {
                u[0] = word_to_uniform(self.word_at(pos));
                filled = 1;
            }
            while filled + 1 < u.len() {
                let block_id = (pos + filled as u64) >> 1;
                let ctr = [block_id as u32, (block_id >> 32) as u32, self.index[0], self.index[1]];
                let b = philox4x32_10(ctr, self.key);
                u[filled] = word_to_uniform(b[0] as u64 | ((b[1] as u64) << 32));
                u[filled + 1] = word_to_uniform(b[2] as u64 | ((b[3] as u64) << 32));
                filled += 2;
            }
            if filled < u.len() {
                u[filled] = word_to_uniform(self.word_at(pos + filled as u64));
            }

            for (slot, &p) in chunk.iter_mut().zip(u.iter()) {
                *slot = scale * ppnd16_central(p - 0.5);
            }
            let mut tail_count = 0;
            for (i, &p) in u.iter().enumerate() {
                tails[tail_count] = i as u16;
                tail_count += ((p - 0.5).abs() > 0.425) as usize;
            }
            for &i in &tails[..tail_count] {
                chunk[i as usize] = scale * ppnd16(u[i as usize]);
            }
            pos += chunk.len() as u64;
        }
    }
}

#[inline(always)]
pub fn word_to_uniform(w: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((w >> 11) as f64 + 0.5) * SCALE
}

/// A vector of Euclidean norm one.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Scales `v` to unit norm. Fails on the zero vector.
    pub fn normalize(mut v: Vec<f64>) -> Result<Self> {
        let norm = crate::linalg::norm(&v);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(Self(v))
    }

    /// Accepts `v` only if its norm is within `tol` of one. The entries are kept as given.
    pub fn checked(v: Vec<f64>, tol: f64) -> Result<Self> {
        let norm = crate::linalg::norm(&v);
        if (norm - 1.0).abs() > tol {
            return Err(invalid(format!("expected a unit vector, norm is {norm}")));
        }
        Ok(Self(v))
    }

    /// The standard basis vector `e_index` (0-based).
    pub fn basis(n: usize, index: usize) -> Self {
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }
}

impl std::ops::Deref for UnitVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A point drawn uniformly from the unit sphere in R^n.
pub fn unit_sphere(stream: &mut RandomStream, n: usize) -> Result<UnitVector> {
    if n < 1 {
        return Err(invalid("unit_sphere needs n >= 1"));
    }
    loop {
        let g: Vec<f64> = (0..n).map(|_| stream.next_standard_normal()).collect();
        if let Ok(u) = UnitVector::normalize(g) {
            return Ok(u);
        }
    }
}

/// `r` orthonormal vectors whose span is uniformly distributed: a Gaussian
/// `n × r` matrix orthonormalized column by column with two Gram–Schmidt passes.
pub fn orthonormal_spikes(stream: &mut RandomStream, n: usize, r: usize) -> Result<Vec<UnitVector>> {
    if r < 1 || r > n {
        return Err(invalid(format!("need 1 <= r <= n, got r = {r}, n = {n}")));
    }
    let mut basis: Vec<UnitVector> = Vec::with_capacity(r);
    while basis.len() < r {
        let mut g: Vec<f64> = (0..n).map(|_| stream.next_standard_normal()).collect();
        for _ in 0..2 {
            for q in &basis {
                let c = crate::linalg::dot(&g, q);
                g.iter_mut().zip(q.iter()).for_each(|(x, qi)| *x -= c * qi);
            }
        }
        if crate::linalg::norm(&g) > 1e-8 {
            basis.push(UnitVector::normalize(g)?);
        }
    }
    Ok(basis)
}

/// The i.i.d. N(0, 1/n) noise entry at a row-major flat index of an order-`k`
/// tensor.
pub fn noise_entry(noise_seed: u64, flat_index: u64, n: usize, k: usize) -> Result<f64> {
    let len = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if (flat_index as u128) >= len {
        return Err(invalid(format!("flat index {flat_index} out of range for n^k = {len}")));
    }
    let mut out = [0.0];
    NoiseSource::new(noise_seed, n).fill(flat_index, &mut out);
    Ok(out[0])
}

/// Shared generator of noise entries for the dense and streaming backends.
#[derive(Debug, Clone)]
pub(crate) struct NoiseSource {
    stream: RandomStream,
    scale: f64,
}

impl NoiseSource {
    pub(crate) fn new(noise_seed: u64, n: usize) -> Self {
        Self {
            stream: derive_stream(&StreamKey::new(noise_seed, "noise", 0)),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    #[inline]
    pub(crate) fn fill(&mut self, start: u64, out: &mut [f64]) {
        self.stream.fill_scaled_normals(start, self.scale, out);
    }
}
