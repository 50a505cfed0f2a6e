//! Monte Carlo sampling of μ_λ from its random-series representation
//! `Y = Σ_{k≥1} s_k λᵏ` with fair independent signs.
//!
//! Samples live on the symmetric attractor `[−λ/(1−λ), λ/(1−λ)]`. For
//! λ = 1/4 the same sign string also gives the unit-embedded point
//! `Σ (1 + s_k) 4⁻ᵏ ∈ [0, 2/3]` (digits 0 and 2), which is the picture the
//! maps `τ_n(y) = n·y mod 1` act on. Those maps are evaluated on the exact
//! integer numerator `Σ (1+s_k) 4^{D−k}`, so interval counts are exact.
//!
//! Randomness comes from ChaCha8 streams keyed by `(seed, chunk)`. Chunks
//! have a fixed size, so batches do not depend on the number of threads.

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{invalid, Error, Result};
use crate::numeric::{pairwise_sum, pairwise_sum_complex};
use crate::transform::ScaleRatio;

/// Samples per RNG stream.
pub const CHUNK: usize = 4096;
pub const DEFAULT_DEPTH: u32 = 30;
pub const MAX_DEPTH: u32 = 64;
/// Deepest batch whose unit-embedded numerators fit the exact path.
pub const MAX_EXACT_DEPTH: u32 = 48;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    lambda: ScaleRatio,
    depth: u32,
    seed: u64,
    points: Vec<f64>,
    /// Bit `k−1` set iff `s_k = +1`.
    signs: Vec<u64>,
}

impl SampleBatch {
    pub fn lambda(&self) -> ScaleRatio {
        self.lambda
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn sign_bits(&self) -> &[u64] {
        &self.signs
    }

    /// Bound on `|point − Y|` from dropping the terms beyond `depth`.
    pub fn truncation_error(&self) -> f64 {
        let l = self.lambda.get();
        l.powi(self.depth as i32 + 1) / (1.0 - l)
    }

    fn require_quarter(&self) -> Result<()> {
        if self.lambda != ScaleRatio::QUARTER {
            return invalid("unit-embedded maps are defined for lambda = 1/4 only");
        }
        if self.depth > MAX_EXACT_DEPTH {
            return Err(Error::Range(format!(
                "depth {} exceeds {MAX_EXACT_DEPTH} for exact pushforwards",
                self.depth
            )));
        }
        Ok(())
    }

    fn numerator(&self, bits: u64) -> u128 {
        let d = self.depth;
        (0..d)
            .filter(|k| bits >> k & 1 == 1)
            .map(|k| 2u128 << (2 * (d - 1 - k)))
            .sum()
    }

    /// Exact numerators of `τ_n(y)` over the denominator `4^D`.
    fn pushed_numerators(&self, n_scale: u64) -> Result<Vec<u128>> {
        self.require_quarter()?;
        if n_scale == 0 {
            return invalid("scaling factor must be positive");
        }
        let modulus = 1u128 << (2 * self.depth);
        Ok(self
            .signs
            .par_iter()
            .map(|&b| (self.numerator(b) * n_scale as u128) % modulus)
            .collect())
    }

    /// Unit-embedded points `τ_n(y)` as floats (`n = 1` gives `y` itself).
    pub fn pushforward_points(&self, n_scale: u64) -> Result<Vec<f64>> {
        let denom = 4f64.powi(self.depth as i32);
        Ok(self
            .pushed_numerators(n_scale)?
            .into_iter()
            .map(|num| num as f64 / denom)
            .collect())
    }
}

/// `n` samples of `Σ_{k=1}^{D} s_k λᵏ`.
pub fn sample_batch(lambda: ScaleRatio, depth: u32, n: usize, seed: u64) -> Result<SampleBatch> {
    if depth == 0 || depth > MAX_DEPTH {
        return invalid(format!("depth must lie in 1..={MAX_DEPTH}, got {depth}"));
    }
    if n == 0 {
        return invalid("sample count must be positive");
    }
    let mask = if depth == 64 { u64::MAX } else { (1u64 << depth) - 1 };
    let chunks = n.div_ceil(CHUNK);
    let signs: Vec<u64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(move |_| rng.next_u64() & mask).collect::<Vec<_>>()
        })
        .collect();
    let l = lambda.get();
    let powers: Vec<f64> = (1..=depth).scan(1.0, |p, _| {
        *p *= l;
        Some(*p)
    }).collect();
    let points = signs
        .par_iter()
        .map(|&b| {
            (0..depth as usize).rev().fold(0.0, |acc, k| {
                if b >> k & 1 == 1 {
                    acc + powers[k]
                } else {
                    acc - powers[k]
                }
            })
        })
        .collect();
    Ok(SampleBatch {
        lambda,
        depth,
        seed,
        points,
        signs,
    })
}

/// Sample mean of `e^{2πitx}`.
pub fn empirical_char(t: f64, batch: &SampleBatch) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let partial: Vec<Complex64> = batch
        .points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let terms: Vec<Complex64> = chunk
                .iter()
                .map(|&x| {
                    let (s, c) = (TAU * t * x).sin_cos();
                    Complex64::new(c, s)
                })
                .collect();
            pairwise_sum_complex(&terms)
        })
        .collect();
    pairwise_sum_complex(&partial) / batch.len() as f64
}

fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&p| p <= x) as f64 / sorted.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HutchinsonReport {
    /// `sup_x |F(x) − ½F(x/λ − 1) − ½F(x/λ + 1)|` over the grid.
    pub residual: f64,
    /// `residual · √n`.
    pub scaled: f64,
    pub grid_points: usize,
}

/// Self-similarity defect of the empirical CDF under the two contractions
/// `τ±(x) = λ(x ± 1)`.
pub fn hutchinson_residual(batch: &SampleBatch, grid_points: usize) -> Result<HutchinsonReport> {
    if batch.is_empty() {
        return invalid("empty batch");
    }
    if grid_points < 2 {
        return invalid("grid needs at least two points");
    }
    let mut sorted = batch.points.clone();
    sorted.par_sort_unstable_by(|a, b| a.total_cmp(b));
    let l = batch.lambda.get();
    let r = batch.lambda.support_radius();
    let residual = (0..grid_points)
        .map(|j| {
            let x = -r + 2.0 * r * j as f64 / (grid_points - 1) as f64;
            let lhs = ecdf(&sorted, x);
            let rhs = 0.5 * ecdf(&sorted, x / l - 1.0) + 0.5 * ecdf(&sorted, x / l + 1.0);
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max);
    Ok(HutchinsonReport {
        residual,
        scaled: residual * (batch.len() as f64).sqrt(),
        grid_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Coordinates on `[−1/3, 1/3]`.
    Symmetric,
    /// Coordinates on `[0, 1]`, where the attractor sits in `[0, 2/3]`.
    UnitEmbedded,
}

/// Half-open interval `(a, b]` with rational endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalQuery {
    lo: Ratio<i64>,
    hi: Ratio<i64>,
    representation: Representation,
}

impl IntervalQuery {
    pub fn new(lo: Ratio<i64>, hi: Ratio<i64>, representation: Representation) -> Result<Self> {
        if lo >= hi {
            return invalid(format!("empty interval ({lo}, {hi}]"));
        }
        const LIMIT: i64 = 1 << 24;
        if [lo, hi]
            .iter()
            .any(|r| r.numer().abs() > LIMIT || *r.denom() > LIMIT)
        {
            return Err(Error::Range("interval endpoints too large".into()));
        }
        Ok(IntervalQuery {
            lo,
            hi,
            representation,
        })
    }

    /// `(2/3, 1]` in unit-embedded coordinates.
    pub fn upper_gap() -> Self {
        IntervalQuery::new(Ratio::new(2, 3), Ratio::from_integer(1), Representation::UnitEmbedded)
            .expect("valid interval")
    }

    pub fn lo(&self) -> Ratio<i64> {
        self.lo
    }

    pub fn hi(&self) -> Ratio<i64> {
        self.hi
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    fn unit_bounds(&self) -> (Ratio<i64>, Ratio<i64>) {
        match self.representation {
            Representation::UnitEmbedded => (self.lo, self.hi),
            Representation::Symmetric => {
                let shift = Ratio::new(1, 3);
                (self.lo + shift, self.hi + shift)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub estimate: f64,
    pub wilson_ci_95: (f64, f64),
    pub count: u64,
    pub n: u64,
}

/// Wilson score interval at 95% for `count` successes in `n` trials.
pub fn wilson_interval(count: u64, n: u64) -> (f64, f64) {
    let n = n as f64;
    let p = count as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if count == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if count as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Fraction of `τ_n`-pushed samples in the query interval.
pub fn pushforward_mass(batch: &SampleBatch, n_scale: u64, q: &IntervalQuery) -> Result<MassEstimate> {
    let nums = batch.pushed_numerators(n_scale)?;
    let (lo, hi) = q.unit_bounds();
    let denom = 1i128 << (2 * batch.depth);
    // y = num / 4^D lies in (p/q, r/s]  ⇔  num·q > p·4^D  and  num·s ≤ r·4^D
    let lo_num = *lo.numer() as i128 * denom;
    let hi_num = *hi.numer() as i128 * denom;
    let lo_den = *lo.denom() as i128;
    let hi_den = *hi.denom() as i128;
    let count = nums
        .par_iter()
        .filter(|&&num| {
            let num = num as i128;
            num * lo_den > lo_num && num * hi_den <= hi_num
        })
        .count() as u64;
    let n = batch.len() as u64;
    Ok(MassEstimate {
        estimate: count as f64 / n as f64,
        wilson_ci_95: wilson_interval(count, n),
        count,
        n,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(|x, y| x.total_cmp(y));
    b.sort_unstable_by(|x, y| x.total_cmp(y));
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic 95% critical value of the two-sample KS statistic.
pub fn ks_threshold(n: usize, m: usize) -> f64 {
    1.358 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Most levels accepted by [`figure1_data`].
pub const MAX_FIGURE_LEVELS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigureRow {
    /// `sawtooth`, `cantor`, or `preimage`.
    pub series: &'static str,
    pub level: u32,
    pub index: u64,
    pub a: f64,
    pub b: f64,
}

/// Plot data for `τ₅` over the unit-embedded Cantor set:
///
/// * `sawtooth`: `a = x`, `b = τ₅(x)` on `grid_points` equispaced x in [0, 1];
/// * `cantor`: level-ℓ approximation intervals `[a, b]` of `X_{1/4}` in
///   `[0, 2/3]`, for ℓ = 1..=levels;
/// * `preimage`: the five branches `(a, b]` of `τ₅⁻¹((2/3, 1])`.
pub fn figure1_data(levels: u32, grid_points: usize) -> Result<Vec<FigureRow>> {
    if levels > MAX_FIGURE_LEVELS {
        return Err(Error::Range(format!(
            "at most {MAX_FIGURE_LEVELS} levels, got {levels}"
        )));
    }
    if grid_points < 2 {
        return invalid("grid needs at least two points");
    }
    let mut rows = Vec::new();
    for j in 0..grid_points {
        let x = j as f64 / (grid_points - 1) as f64;
        rows.push(FigureRow {
            series: "sawtooth",
            level: 0,
            index: j as u64,
            a: x,
            b: sawtooth(5, x),
        });
    }
    for level in 1..=levels {
        let width = 2.0 / 3.0 * 0.25f64.powi(level as i32);
        for idx in 0..(1u64 << level) {
            // digit k (most significant first) is 2 when bit (level-1-k) is set
            let left: f64 = (0..level)
                .map(|k| {
                    let bit = idx >> (level - 1 - k) & 1;
                    2.0 * bit as f64 * 0.25f64.powi(k as i32 + 1)
                })
                .sum();
            rows.push(FigureRow {
                series: "cantor",
                level,
                index: idx,
                a: left,
                b: left + width,
            });
        }
    }
    for k in 0..5u64 {
        rows.push(FigureRow {
            series: "preimage",
            level: 0,
            index: k,
            a: k as f64 / 5.0 + 2.0 / 15.0,
            b: (k + 1) as f64 / 5.0,
        });
    }
    Ok(rows)
}

/// `τ_n(x) = n·x mod 1`.
pub fn sawtooth(n: u64, x: f64) -> f64 {
    let y = n as f64 * x;
    y - y.floor()
}

/// Mean and standard error of the batch.
pub fn mean_and_stderr(batch: &SampleBatch) -> (f64, f64) {
    let n = batch.len() as f64;
    let mean = pairwise_sum(&batch.points) / n;
    let sq: Vec<f64> = batch.points.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_digit_batches_are_coin_tosses() {
        let b = sample_batch(ScaleRatio::QUARTER, 1, 100_000, 3).unwrap();
        assert!(b.points().iter().all(|&x| x == 0.25 || x == -0.25));
        let plus = b.points().iter().filter(|&&x| x > 0.0).count() as f64 / b.len() as f64;
        let sigma = (0.25f64 / b.len() as f64).sqrt();
        assert!((plus - 0.5).abs() <= 3.0 * sigma, "{plus}");
    }

    #[test]
    fn argument_validation() {
        assert!(sample_batch(ScaleRatio::QUARTER, 0, 10, 0).is_err());
        assert!(sample_batch(ScaleRatio::QUARTER, 65, 10, 0).is_err());
        assert!(sample_batch(ScaleRatio::QUARTER, 30, 0, 0).is_err());
        let b = sample_batch(ScaleRatio::QUARTER, 30, 10, 0).unwrap();
        assert!(hutchinson_residual(&b, 1).is_err());
        assert!(pushforward_mass(&b, 0, &IntervalQuery::upper_gap()).is_err());
        assert!(IntervalQuery::new(Ratio::new(1, 2), Ratio::new(1, 3), Representation::Symmetric).is_err());
        let b = sample_batch(ScaleRatio::new(0.3).unwrap(), 30, 10, 0).unwrap();
        assert!(pushforward_mass(&b, 5, &IntervalQuery::upper_gap()).is_err());
    }

    #[test]
    fn depth_thirty_truncation_is_negligible() {
        let b = sample_batch(ScaleRatio::QUARTER, 30, 1, 0).unwrap();
        assert!(b.truncation_error() < 1e-18);
    }

    #[test]
    fn chunking_does_not_depend_on_thread_count() {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| sample_batch(ScaleRatio::QUARTER, 30, 3 * CHUNK + 17, 9).unwrap());
        let b = many.install(|| sample_batch(ScaleRatio::QUARTER, 30, 3 * CHUNK + 17, 9).unwrap());
        assert_eq!(a, b);
        let ca = one.install(|| empirical_char(3.0, &a));
        let cb = many.install(|| empirical_char(3.0, &b));
        assert_eq!(ca, cb);
    }

    #[test]
    fn unit_embedding_matches_shifted_points() {
        let b = sample_batch(ScaleRatio::QUARTER, 30, 1000, 1).unwrap();
        let y = b.pushforward_points(1).unwrap();
        for (x, y) in b.points().iter().zip(&y) {
            assert!((x + 1.0 / 3.0 - y).abs() < 1e-15);
        }
    }

    #[test]
    fn wilson_interval_near_zero() {
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = wilson_interval(500, 1000);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [0.1, 0.2, 0.3];
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&[0.0, 0.1], &[0.5, 0.6]), 1.0);
    }

    #[test]
    fn figure_levels_are_capped() {
        assert!(figure1_data(13, 10).is_err());
        let rows = figure1_data(2, 11).unwrap();
        let pre: Vec<_> = rows.iter().filter(|r| r.series == "preimage").collect();
        assert_eq!(pre.len(), 5);
        assert_eq!(rows.iter().filter(|r| r.series == "cantor").count(), 2 + 4);
    }

    #[test]
    fn sawtooth_breaks_at_fifths() {
        for k in 0..5 {
            let left = k as f64 / 5.0;
            assert!(sawtooth(5, left + 1e-9) < 1e-7);
            assert!(sawtooth(5, left + 0.2 - 1e-9) > 1.0 - 1e-7);
            assert!((sawtooth(5, left + 0.1) - 0.5).abs() < 1e-12);
        }
    }
}
