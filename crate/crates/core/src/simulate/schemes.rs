//! Inspection sampling schemes, selectable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngCore};

use super::{shards, stream_rng, DurationMoments, RenewalSample};
use crate::distributions::{DurationDistribution, ObservationDistribution};
use crate::error::{Error, Result};

/// Timeline horizon in units of E(τ).
pub const TIMELINE_HORIZON: f64 = 1e3;
/// Inspections per simulated timeline.
pub const TIMELINE_INSPECTIONS: usize = 10;
/// Pilot proposals drawn before a rejection run.
pub const PILOT_DRAWS: usize = 10_000;
/// Rejection runs abort below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// A way of drawing (τ, t) pairs as seen by an observer.
pub trait WaitingSampler: Send + Sync {
    fn name(&self) -> &'static str;

    fn supports(&self, o: &ObservationDistribution) -> bool;

    fn draw(&self, d: &DurationDistribution, o: &ObservationDistribution, count: usize, seed: u64) -> Result<RenewalSample>;

    /// Validates arguments, then draws.
    fn sample(&self, d: &DurationDistribution, o: &ObservationDistribution, count: usize, seed: u64) -> Result<RenewalSample> {
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be >= 1".into()));
        }
        if !self.supports(o) {
            return Err(Error::Unsupported(format!(
                "scheme '{}' cannot sample observation law '{}'",
                self.name(),
                o.describe()
            )));
        }
        self.draw(d, o, count, seed)
    }
}

fn merge_moments(parts: &[DurationMoments]) -> DurationMoments {
    let mut total = DurationMoments::default();
    for p in parts {
        total.merge(p);
    }
    total
}

/// Exact stationary inspection: τ from the size-biased law `τ P_W(τ)/E(τ)`,
/// t uniform on [0, τ]. Duration moments are recovered with weights 1/τ.
#[derive(Debug, Clone, Copy, Default)]
pub struct LengthBiased;

impl WaitingSampler for LengthBiased {
    fn name(&self) -> &'static str {
        "length-biased"
    }

    fn supports(&self, o: &ObservationDistribution) -> bool {
        o.is_uniform_improper()
    }

    fn draw(&self, d: &DurationDistribution, _o: &ObservationDistribution, count: usize, seed: u64) -> Result<RenewalSample> {
        let law = d.law();
        let parts = shards(count, seed, |_, n, rng| {
            let mut moments = DurationMoments::default();
            let pairs: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    let tau = law.sample_length_biased(rng);
                    moments.add(tau, 1.0 / tau);
                    (tau, tau * rng.random::<f64>())
                })
                .collect();
            (pairs, moments)
        });
        let moments = merge_moments(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
        let pairs = parts.into_iter().flat_map(|p| p.0).collect();
        RenewalSample::from_pairs(pairs, seed, self.name(), None, moments)
    }
}

/// Simulates renewal timelines of length `TIMELINE_HORIZON · E(τ)` and
/// inspects each at `TIMELINE_INSPECTIONS` uniform times in its second half.
#[derive(Debug, Clone, Copy, Default)]
pub struct TimelineSampler;

impl WaitingSampler for TimelineSampler {
    fn name(&self) -> &'static str {
        "timeline"
    }

    fn supports(&self, o: &ObservationDistribution) -> bool {
        o.is_uniform_improper()
    }

    fn draw(&self, d: &DurationDistribution, _o: &ObservationDistribution, count: usize, seed: u64) -> Result<RenewalSample> {
        let horizon = TIMELINE_HORIZON * d.mean()?;
        let law = d.law();
        let parts = shards(count, seed, |_, n, rng| {
            let mut moments = DurationMoments::default();
            let mut pairs = Vec::with_capacity(n);
            let mut ends = Vec::new();
            while pairs.len() < n {
                ends.clear();
                let mut clock = 0.0;
                while clock <= horizon {
                    let tau = law.sample(rng);
                    clock += tau;
                    ends.push(clock);
                    if clock <= horizon {
                        moments.add(tau, 1.0);
                    }
                }
                let k = TIMELINE_INSPECTIONS.min(n - pairs.len());
                for _ in 0..k {
                    let x = horizon * (0.5 + 0.5 * rng.random::<f64>());
                    let i = ends.partition_point(|&e| e <= x);
                    let start = if i == 0 { 0.0 } else { ends[i - 1] };
                    pairs.push((ends[i] - start, x - start));
                }
            }
            (pairs, moments)
        });
        let moments = merge_moments(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
        let pairs = parts.into_iter().flat_map(|p| p.0).collect();
        RenewalSample::from_pairs(pairs, seed, self.name(), None, moments)
    }
}

/// Repeats `τ ~ P_W`, `t ~ P_O` until `t ≤ τ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RejectionSampler;

fn propose(d: &DurationDistribution, o: &ObservationDistribution, rng: &mut dyn RngCore) -> (f64, f64) {
    let tau = d.law().sample(rng);
    let t = o.law().sample(rng).expect("proper observation law");
    (tau, t)
}

impl WaitingSampler for RejectionSampler {
    fn name(&self) -> &'static str {
        "rejection"
    }

    fn supports(&self, o: &ObservationDistribution) -> bool {
        o.is_proper()
    }

    fn draw(&self, d: &DurationDistribution, o: &ObservationDistribution, count: usize, seed: u64) -> Result<RenewalSample> {
        let mut pilot = stream_rng(seed, u64::MAX);
        let accepted = (0..PILOT_DRAWS)
            .filter(|_| {
                let (tau, t) = propose(d, o, &mut pilot);
                t <= tau
            })
            .count();
        let rate = accepted as f64 / PILOT_DRAWS as f64;
        if rate < MIN_ACCEPTANCE {
            return Err(Error::SamplingAborted {
                rate,
                threshold: MIN_ACCEPTANCE,
            });
        }
        let budget_factor = 10.0 / rate;
        let parts = shards(count, seed, |_, n, rng| {
            let budget = (n as f64 * budget_factor).ceil() as u64 + PILOT_DRAWS as u64;
            let mut moments = DurationMoments::default();
            let mut pairs = Vec::with_capacity(n);
            let mut proposals = 0u64;
            while pairs.len() < n {
                if proposals >= budget {
                    return Err(Error::SamplingAborted {
                        rate: pairs.len() as f64 / proposals as f64,
                        threshold: MIN_ACCEPTANCE,
                    });
                }
                proposals += 1;
                let (tau, t) = propose(d, o, rng);
                moments.add(tau, 1.0);
                if t <= tau {
                    pairs.push((tau, t));
                }
            }
            Ok((pairs, moments, proposals))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let moments = merge_moments(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
        let proposals: u64 = parts.iter().map(|p| p.2).sum();
        let pairs: Vec<(f64, f64)> = parts.into_iter().flat_map(|p| p.0).collect();
        let rate = pairs.len() as f64 / proposals as f64;
        RenewalSample::from_pairs(pairs, seed, self.name(), Some(rate), moments)
    }
}

/// Named inspection schemes.
#[derive(Clone)]
pub struct SamplerRegistry {
    samplers: BTreeMap<String, Arc<dyn WaitingSampler>>,
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        Self {
            samplers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, sampler: impl WaitingSampler + 'static) {
        self.samplers.insert(sampler.name().to_string(), Arc::new(sampler));
    }

    pub fn names(&self) -> Vec<&str> {
        self.samplers.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn WaitingSampler>> {
        self.samplers.get(name).cloned().ok_or_else(|| {
            Error::InvalidParameter(format!("unknown scheme '{name}' (known: {})", self.names().join(", ")))
        })
    }

    /// Length-biased for uniform observation, rejection otherwise.
    pub fn default_for(&self, o: &ObservationDistribution) -> Result<Arc<dyn WaitingSampler>> {
        self.get(if o.is_uniform_improper() { "length-biased" } else { "rejection" })
    }
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(LengthBiased);
        r.register(TimelineSampler);
        r.register(RejectionSampler);
        r
    }
}
