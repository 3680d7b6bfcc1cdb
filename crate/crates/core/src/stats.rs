//! Statistical primitives: the standard normal distribution, Kolmogorov–Smirnov
//! distance, empirical coverage and histogram binning.
//!
//! `erf`/`erfc` come from `libm`, a pure-Rust port of the FreeBSD math library,
//! so results do not depend on the host C runtime.

use crate::error::{invalid, Result};
use crate::inference::Interval;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF, `0.5 * erfc(-x / sqrt 2)`.
///
/// The complementary form keeps full relative precision in the lower tail.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

/// Inverse standard normal CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("quantile level must lie in (0, 1), got {p}")));
    }
    Ok(ppnd16(p))
}

/// Wichura's AS 241 (PPND16) rational approximation, relative accuracy about
/// 1e-16 on (0, 1). Uses `libm::log` so that the output is bit-stable across
/// platforms; the Gaussian sampler depends on that.
#[allow(clippy::excessive_precision)]
pub(crate) fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        return ppnd16_central(q);
    }

    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(tail));
    let value = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414_076_4e-4 * r + 2.272_384_498_926_918_458_33e-2)
            * r
            + 2.417_807_251_774_506_117_7e-1)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34;
        let den = ((((((1.050_750_071_644_416_843_24e-9 * r + 5.475_938_084_995_344_946e-4)
            * r
            + 1.519_866_656_361_645_719_66e-2)
            * r
            + 1.481_039_764_274_800_745_9e-1)
            * r
            + 6.897_673_349_851_000_045_5e-1)
            * r
            + 1.676_384_830_183_803_849_4)
            * r
            + 2.053_191_626_637_758_821_87)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_132_65e-7 * r + 2.711_555_568_743_487_578_15e-5)
            * r
            + 1.242_660_947_388_078_438_6e-3)
            * r
            + 2.653_218_952_657_612_309_3e-2)
            * r
            + 2.965_605_718_285_048_912_3e-1)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2;
        let den = ((((((2.044_263_103_389_939_785_64e-15 * r + 1.421_511_758_316_445_888_7e-7)
            * r
            + 1.846_318_317_510_054_681_8e-5)
            * r
            + 7.868_691_311_456_132_591e-4)
            * r
            + 1.487_536_129_085_061_485_25e-2)
            * r
            + 1.369_298_809_227_358_053_1e-1)
            * r
            + 5.998_322_065_558_879_376_9e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

/// Central branch of AS 241 for `q = p - 0.5`, `|q| <= 0.425`.
#[inline(always)]
#[allow(clippy::excessive_precision)]
pub(crate) fn ppnd16_central(q: f64) -> f64 {
    let r = 0.180625 - q * q;
    let num = (((((((2.509_080_928_730_122_672_7e3 * r + 3.343_057_558_358_812_810_5e4) * r
        + 6.726_577_092_700_870_085_3e4)
        * r
        + 4.592_195_393_154_987_145_7e4)
        * r
        + 1.373_169_376_550_946_112_5e4)
        * r
        + 1.971_590_950_306_551_442_7e3)
        * r
        + 1.331_416_678_917_843_774_5e2)
        * r
        + 3.387_132_872_796_366_608_0)
        * q;
    let den = ((((((5.226_495_278_852_854_561_0e3 * r + 2.872_908_573_572_194_267_4e4) * r
        + 3.930_789_580_009_271_061_0e4)
        * r
        + 2.121_379_430_158_659_586_7e4)
        * r
        + 5.394_196_021_424_751_107_7e3)
        * r
        + 6.871_870_074_920_579_083_0e2)
        * r
        + 4.231_333_070_160_091_125_2e1)
        * r
        + 1.0;
    num / den
}

/// Two-sided critical value `Φ⁻¹(1 − α/2)`. `alpha = 1` gives 0.
pub fn two_sided_critical(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("significance level must lie in (0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    normal_quantile(1.0 - alpha / 2.0)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("ks_distance needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Asymptotic KS critical value at the 1% level, `1.63 / sqrt(N)`.
pub fn ks_critical_1pct(samples: usize) -> f64 {
    1.63 / (samples as f64).sqrt()
}

/// Fraction of intervals that contain their truth.
pub fn empirical_coverage(intervals: &[Interval], truths: &[f64]) -> Result<f64> {
    if intervals.len() != truths.len() {
        return Err(invalid(format!(
            "{} intervals but {} truths",
            intervals.len(),
            truths.len()
        )));
    }
    if intervals.is_empty() {
        return Err(invalid("empirical_coverage needs at least one interval"));
    }
    let hits = intervals
        .iter()
        .zip(truths)
        .filter(|(ci, &t)| ci.contains(t))
        .count();
    Ok(hits as f64 / intervals.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples that fell inside `[edges[0], edges[last])`.
    pub total: u64,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn samples(&self) -> u64 {
        self.total + self.underflow + self.overflow
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Count divided by (all samples × bin width).
    pub fn density(&self, bin: usize) -> f64 {
        let width = self.edges[bin + 1] - self.edges[bin];
        let n = self.samples();
        if n == 0 {
            return 0.0;
        }
        self.counts[bin] as f64 / (n as f64 * width)
    }
}

/// `bins + 1` equal-width edges spanning `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    (0..=bins).map(|i| lo + width * i as f64).collect()
}

/// Bins samples into half-open `[e_i, e_{i+1})` intervals.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 {
        return Err(invalid("histogram needs at least two edges"));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("histogram edges must be strictly increasing"));
    }
    let mut counts = vec![0u64; edges.len() - 1];
    let (mut underflow, mut overflow) = (0u64, 0u64);
    let last = edges[edges.len() - 1];
    for &x in samples {
        if x < edges[0] {
            underflow += 1;
        } else if x >= last || x.is_nan() {
            overflow += 1;
        } else {
            // first edge strictly greater than x, minus one
            let bin = edges.partition_point(|&e| e <= x) - 1;
            counts[bin] += 1;
        }
    }
    let total = counts.iter().sum();
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        total,
        underflow,
        overflow,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}
