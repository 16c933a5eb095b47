//! Seeded Monte Carlo oracle: renewal sequences, inspection sampling and
//! empirical waiting-time statistics.
//!
//! Work is split into fixed-size shards. Shard `k` draws from a ChaCha8
//! stream keyed by `(seed, k)`, and shard outputs are concatenated in shard
//! order, so parallel and serial runs are bit-identical.

mod ks;
mod schemes;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{exceeds, Method, WaitingTimeAnalysis};
use crate::distributions::{DurationDistribution, ObservationDistribution};
use crate::error::{Error, Result};

pub use ks::ks_distance;
pub use schemes::{
    LengthBiased, RejectionSampler, SamplerRegistry, TimelineSampler, WaitingSampler, MIN_ACCEPTANCE,
    PILOT_DRAWS, TIMELINE_HORIZON, TIMELINE_INSPECTIONS,
};

/// Draws per shard.
pub const SHARD_SIZE: usize = 1 << 16;

/// RNG for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f(shard_id, shard_len, rng)` over the shards of `count` draws and
/// returns the per-shard outputs in shard order.
pub fn shards<T, F>(count: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize, &mut dyn RngCore) -> T + Sync,
{
    let n_shards = count.div_ceil(SHARD_SIZE);
    (0..n_shards)
        .into_par_iter()
        .map(|k| {
            let len = SHARD_SIZE.min(count - k * SHARD_SIZE);
            let mut rng = stream_rng(seed, k as u64);
            f(k as u64, len, &mut rng)
        })
        .collect()
}

/// [`shards`] with the per-shard vectors concatenated.
pub fn sharded<T, F>(count: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize, &mut dyn RngCore) -> Vec<T> + Sync,
{
    let parts = shards(count, seed, f);
    let mut out = Vec::with_capacity(count);
    for part in parts {
        out.extend(part);
    }
    out
}

/// Weighted sums `Σ wᵢ`, `Σ wᵢ τᵢⁿ` estimating the unbiased duration moments
/// from whatever durations a scheme saw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DurationMoments {
    pub weight: f64,
    pub sums: [f64; 3],
}

impl DurationMoments {
    pub fn add(&mut self, tau: f64, weight: f64) {
        self.weight += weight;
        let mut p = weight;
        for s in &mut self.sums {
            p *= tau;
            *s += p;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.weight += other.weight;
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            *a += b;
        }
    }

    /// Estimate of E(τⁿ), `n ∈ 1..=3`.
    pub fn moment(&self, n: usize) -> f64 {
        self.sums[n - 1] / self.weight
    }
}

/// Monte Carlo draws of (τ, t, s = τ - t).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalSample {
    durations: Vec<f64>,
    offsets: Vec<f64>,
    waits: Vec<f64>,
    pub seed: u64,
    pub scheme: String,
    /// Accepted / proposed pairs for rejection sampling.
    pub acceptance_rate: Option<f64>,
    /// Estimates of the (unbiased) duration moments seen during sampling.
    pub duration_moments: DurationMoments,
}

impl RenewalSample {
    /// Builds a sample from `(τ, t)` pairs, checking `0 ≤ t ≤ τ`.
    pub fn from_pairs(
        pairs: Vec<(f64, f64)>,
        seed: u64,
        scheme: &str,
        acceptance_rate: Option<f64>,
        duration_moments: DurationMoments,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty);
        }
        let mut durations = Vec::with_capacity(pairs.len());
        let mut offsets = Vec::with_capacity(pairs.len());
        let mut waits = Vec::with_capacity(pairs.len());
        for (i, &(tau, t)) in pairs.iter().enumerate() {
            if !(t >= 0.0 && t <= tau) || !tau.is_finite() {
                return Err(Error::Numeric(format!("draw {i}: offset {t} outside [0, {tau}]")));
            }
            durations.push(tau);
            offsets.push(t);
            waits.push(tau - t);
        }
        Ok(Self {
            durations,
            offsets,
            waits,
            seed,
            scheme: scheme.to_string(),
            acceptance_rate,
            duration_moments,
        })
    }

    pub fn len(&self) -> usize {
        self.waits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waits.is_empty()
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn waits(&self) -> &[f64] {
        &self.waits
    }

    /// Plug-in `E(τ²)/2E(τ)` from the duration moments.
    pub fn plug_in_mean_wait(&self) -> f64 {
        let m = &self.duration_moments;
        m.moment(2) / (2.0 * m.moment(1))
    }

    /// Plug-in waiting-time std from the duration moments (unclamped radicand
    /// reported as an error).
    pub fn plug_in_std(&self) -> Result<f64> {
        let m = &self.duration_moments;
        crate::analytics::std_wait_from_moments(m.moment(1), m.moment(2), m.moment(3))
    }
}

/// Mean and standard deviation of a sample with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub std: f64,
    pub se_mean: f64,
    /// Delta-method standard error of the std: `√((μ₄ - σ⁴)/(4σ²n))`.
    pub se_std: f64,
}

pub fn summarize(xs: &[f64]) -> Result<SampleSummary> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData { got: xs.len(), need: 2 });
    }
    let n = xs.len() as f64;
    let mean = crate::fit::compensated_sum(xs.iter().copied()) / n;
    let second_moment = crate::fit::compensated_sum(xs.iter().map(|x| x * x)) / n;
    let c2 = crate::fit::compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / n;
    let c4 = crate::fit::compensated_sum(xs.iter().map(|x| (x - mean).powi(4))) / n;
    let var = c2 * n / (n - 1.0);
    let std = var.sqrt();
    let se_std = if c2 > 0.0 { ((c4 - c2 * c2).max(0.0) / (4.0 * c2 * n)).sqrt() } else { 0.0 };
    Ok(SampleSummary {
        count: xs.len(),
        mean,
        second_moment,
        std,
        se_mean: std / n.sqrt(),
        se_std,
    })
}

/// Sample moments of the waiting times; the mean duration is the scheme's
/// unbiased duration estimate.
pub fn empirical_waiting_stats(r: &RenewalSample) -> Result<WaitingTimeAnalysis> {
    let s = summarize(r.waits())?;
    let mean_duration = r.duration_moments.moment(1);
    Ok(WaitingTimeAnalysis {
        mean_wait: s.mean,
        second_moment: s.second_moment,
        std: s.std,
        mean_duration,
        delta: None,
        paradox: exceeds(s.mean, mean_duration),
        method: Method::MonteCarlo,
    })
}

/// Stationary inspection under uniform observation (length-biased scheme).
pub fn sample_waiting_uniform(d: &DurationDistribution, count: usize, seed: u64) -> Result<RenewalSample> {
    LengthBiased.sample(d, &ObservationDistribution::uniform_improper(), count, seed)
}

/// Rejection sampling of `(τ, t)` with `t ≤ τ` under a proper observation law.
pub fn sample_waiting_general(
    d: &DurationDistribution,
    o: &ObservationDistribution,
    count: usize,
    seed: u64,
) -> Result<RenewalSample> {
    RejectionSampler.sample(d, o, count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shards_cover_count_in_order() {
        let v = sharded(SHARD_SIZE * 2 + 5, 3, |k, n, _| vec![k; n]);
        assert_eq!(v.len(), SHARD_SIZE * 2 + 5);
        assert_eq!(v[0], 0);
        assert_eq!(v[SHARD_SIZE], 1);
        assert_eq!(*v.last().unwrap(), 2);
        assert!(sharded(0, 1, |_, n, _| vec![0u8; n]).is_empty());
    }

    #[test]
    fn parallel_matches_serial() {
        let count = SHARD_SIZE * 3 + 17;
        let par = sharded(count, 42, |_, n, rng| (0..n).map(|_| rng.next_u64()).collect());
        let mut serial = Vec::new();
        for k in 0..4u64 {
            let len = SHARD_SIZE.min(count - k as usize * SHARD_SIZE);
            let mut rng = stream_rng(42, k);
            serial.extend((0..len).map(|_| rng.next_u64()));
        }
        assert_eq!(par, serial);
    }

    #[test]
    fn streams_differ() {
        let a = stream_rng(1, 0).next_u64();
        let b = stream_rng(1, 1).next_u64();
        let c = stream_rng(2, 0).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_invariants_enforced() {
        assert!(RenewalSample::from_pairs(vec![(1.0, 1.5)], 0, "x", None, DurationMoments::default()).is_err());
        assert!(RenewalSample::from_pairs(vec![(1.0, -0.1)], 0, "x", None, DurationMoments::default()).is_err());
        assert!(RenewalSample::from_pairs(vec![], 0, "x", None, DurationMoments::default()).is_err());
        let r = RenewalSample::from_pairs(vec![(2.0, 0.5), (1.0, 1.0)], 0, "x", None, DurationMoments::default()).unwrap();
        assert_eq!(r.waits(), &[1.5, 0.0]);
    }

    #[test]
    fn constant_waits() {
        let mut m = DurationMoments::default();
        for _ in 0..4 {
            m.add(2.0, 1.0);
        }
        let r = RenewalSample::from_pairs(vec![(2.0, 1.0); 4], 0, "x", None, m).unwrap();
        let a = empirical_waiting_stats(&r).unwrap();
        assert_eq!(a.mean_wait, 1.0);
        assert_eq!(a.std, 0.0);
        assert_eq!(a.method, Method::MonteCarlo);
        assert!(a.delta.is_none());
        assert_eq!(r.plug_in_mean_wait(), 1.0);
        let one = RenewalSample::from_pairs(vec![(2.0, 1.0)], 0, "x", None, m).unwrap();
        assert!(matches!(empirical_waiting_stats(&one), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn summary_of_known_values() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.second_moment, 7.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn duration_moments_weighting() {
        let mut m = DurationMoments::default();
        m.add(1.0, 1.0);
        m.add(3.0, 1.0);
        assert_eq!(m.moment(1), 2.0);
        assert_eq!(m.moment(2), 5.0);
        assert_eq!(m.moment(3), 14.0);
    }
}
