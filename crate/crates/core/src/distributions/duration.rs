//! Laws of the inter-update duration τ.

use std::fmt;
use std::sync::Arc;

use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_distr::Gamma as GammaSampler;

use crate::error::{Error, Result};
use crate::special::{gamma_p, gamma_q, gamma_unchecked, integrate_semi_infinite, ln_gamma_unchecked, QuadratureSpec};

/// Behaviour shared by every duration law.
///
/// Implementations may assume `tau >= 0`; [`DurationDistribution`] checks
/// the domain before delegating.
pub trait DurationLaw: fmt::Debug + Send + Sync {
    /// Registry name, e.g. `"weibull"`.
    fn name(&self) -> &'static str;

    /// Parameters in registry order, for reports.
    fn params(&self) -> Vec<(&'static str, f64)>;

    fn pdf(&self, tau: f64) -> f64;

    /// P(τ > s).
    fn survival(&self, s: f64) -> f64;

    /// E(τⁿ). The default integrates `τⁿ·pdf` numerically.
    fn raw_moment(&self, n: u32) -> Result<f64> {
        let r = integrate_semi_infinite(|t| t.powi(n as i32) * self.pdf(t), 0.0, &QuadratureSpec::default())?;
        Ok(r.value)
    }

    /// One draw from the law.
    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    /// One draw from the length-biased law `τ·pdf(τ)/E(τ)`, i.e. the
    /// duration covering a uniformly random inspection instant.
    fn sample_length_biased(&self, rng: &mut dyn RngCore) -> f64;

    /// `(m, a)` when the law is a Weibull in the `(m/a) τ^{m-1} e^{-τ^m/a}` form.
    fn weibull_params(&self) -> Option<(f64, f64)> {
        None
    }

    /// `∫_s^∞ survival(u) du`, used for the uniform-observation waiting-time
    /// CDF. The default integrates numerically.
    fn integrated_survival(&self, s: f64) -> Result<f64> {
        let r = integrate_semi_infinite(|u| self.survival(u), s, &QuadratureSpec::default())?;
        Ok(r.value)
    }

    /// True when the samples behind the law are the law itself (moments are
    /// sample moments).
    fn is_empirical(&self) -> bool {
        false
    }
}

pub(crate) fn open_unit(rng: &mut dyn RngCore) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {value}")))
    }
}

fn gamma_draw(shape: f64, scale: f64, rng: &mut dyn RngCore) -> f64 {
    // parameters are validated at construction
    GammaSampler::new(shape, scale)
        .expect("validated gamma parameters")
        .sample(rng)
}

/// Weibull law in the `(m, a)` form: pdf `(m/a) τ^{m-1} e^{-τ^m/a}`,
/// survival `e^{-τ^m/a}`. The conventional scale is `λ = a^{1/m}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weibull {
    m: f64,
    a: f64,
}

impl Weibull {
    pub fn new(m: f64, a: f64) -> Result<Self> {
        Ok(Self {
            m: positive("weibull shape m", m)?,
            a: positive("weibull parameter a", a)?,
        })
    }

    /// Builds from the conventional `(shape k, scale λ)` pair.
    pub fn from_shape_scale(shape: f64, scale: f64) -> Result<Self> {
        let shape = positive("weibull shape", shape)?;
        let scale = positive("weibull scale", scale)?;
        Self::new(shape, scale.powf(shape))
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Conventional scale `λ = a^{1/m}`.
    pub fn scale(&self) -> f64 {
        self.a.powf(1.0 / self.m)
    }
}

/// `a^{p} Γ(x)` without intermediate overflow where possible.
fn power_gamma(a: f64, p: f64, x: f64, what: &str) -> Result<f64> {
    let direct = a.powf(p) * gamma_unchecked(x);
    if direct.is_finite() && direct > 0.0 && x < 171.0 {
        return Ok(direct);
    }
    let log = p * a.ln() + ln_gamma_unchecked(x);
    if log > f64::MAX.ln() {
        return Err(Error::Overflow(format!("{what} exceeds f64 range (log value {log})")));
    }
    Ok(log.exp())
}

impl DurationLaw for Weibull {
    fn name(&self) -> &'static str {
        "weibull"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("m", self.m), ("a", self.a)]
    }

    fn pdf(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            return match self.m {
                m if m < 1.0 => f64::INFINITY,
                m if m > 1.0 => 0.0,
                _ => 1.0 / self.a,
            };
        }
        let tm = tau.powf(self.m);
        (self.m / self.a) * tm / tau * (-tm / self.a).exp()
    }

    fn survival(&self, s: f64) -> f64 {
        (-s.powf(self.m) / self.a).exp()
    }

    fn raw_moment(&self, n: u32) -> Result<f64> {
        let p = n as f64 / self.m;
        power_gamma(self.a, p, 1.0 + p, &format!("weibull moment E(tau^{n})"))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        (self.a * -open_unit(rng).ln()).powf(1.0 / self.m)
    }

    fn sample_length_biased(&self, rng: &mut dyn RngCore) -> f64 {
        // τ^m/a is Gamma(1 + 1/m, 1) under length biasing
        let u = gamma_draw(1.0 + 1.0 / self.m, 1.0, rng);
        (self.a * u).powf(1.0 / self.m)
    }

    fn weibull_params(&self) -> Option<(f64, f64)> {
        Some((self.m, self.a))
    }

    fn integrated_survival(&self, s: f64) -> Result<f64> {
        // ∫_s^∞ e^{-u^m/a} du = (a^{1/m}/m) Γ(1/m) Q(1/m, s^m/a)
        let k = 1.0 / self.m;
        let head = power_gamma(self.a, k, k, "weibull integrated survival")? / self.m;
        Ok(head * gamma_q(k, s.powf(self.m) / self.a)?)
    }
}

/// Exponential law parameterized by its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    mean: f64,
}

impl Exponential {
    pub fn new(mean: f64) -> Result<Self> {
        Ok(Self {
            mean: positive("exponential mean", mean)?,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

impl DurationLaw for Exponential {
    fn name(&self) -> &'static str {
        "exponential"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("mean", self.mean)]
    }

    fn pdf(&self, tau: f64) -> f64 {
        (-tau / self.mean).exp() / self.mean
    }

    fn survival(&self, s: f64) -> f64 {
        (-s / self.mean).exp()
    }

    fn raw_moment(&self, n: u32) -> Result<f64> {
        power_gamma(self.mean, n as f64, n as f64 + 1.0, "exponential moment")
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        -self.mean * open_unit(rng).ln()
    }

    fn sample_length_biased(&self, rng: &mut dyn RngCore) -> f64 {
        gamma_draw(2.0, self.mean, rng)
    }

    fn weibull_params(&self) -> Option<(f64, f64)> {
        Some((1.0, self.mean))
    }

    fn integrated_survival(&self, s: f64) -> Result<f64> {
        Ok(self.mean * self.survival(s))
    }
}

/// Gamma law with shape `k` and scale `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLaw {
    shape: f64,
    scale: f64,
}

impl GammaLaw {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            shape: positive("gamma shape k", shape)?,
            scale: positive("gamma scale theta", scale)?,
        })
    }
}

impl DurationLaw for GammaLaw {
    fn name(&self) -> &'static str {
        "gamma"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("k", self.shape), ("theta", self.scale)]
    }

    fn pdf(&self, tau: f64) -> f64 {
        let x = tau / self.scale;
        if x == 0.0 {
            return match self.shape {
                k if k < 1.0 => f64::INFINITY,
                k if k > 1.0 => 0.0,
                _ => 1.0 / self.scale,
            };
        }
        ((self.shape - 1.0) * x.ln() - x - ln_gamma_unchecked(self.shape)).exp() / self.scale
    }

    fn survival(&self, s: f64) -> f64 {
        gamma_q(self.shape, s / self.scale).unwrap_or(0.0)
    }

    fn raw_moment(&self, n: u32) -> Result<f64> {
        // θⁿ Γ(k+n)/Γ(k)
        let log = n as f64 * self.scale.ln() + ln_gamma_unchecked(self.shape + n as f64) - ln_gamma_unchecked(self.shape);
        if log > f64::MAX.ln() {
            return Err(Error::Overflow(format!("gamma moment E(tau^{n}) exceeds f64 range")));
        }
        let rising: f64 = (0..n).map(|i| self.shape + i as f64).product();
        let direct = self.scale.powi(n as i32) * rising;
        Ok(if direct.is_finite() { direct } else { log.exp() })
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        gamma_draw(self.shape, self.scale, rng)
    }

    fn sample_length_biased(&self, rng: &mut dyn RngCore) -> f64 {
        gamma_draw(self.shape + 1.0, self.scale, rng)
    }

    fn integrated_survival(&self, s: f64) -> Result<f64> {
        // ∫_s^∞ Q(k, u/θ) du = θ [k Q(k+1, x) - x Q(k, x)], x = s/θ
        let x = s / self.scale;
        let k = self.shape;
        Ok(self.scale * (k * gamma_q(k + 1.0, x)? - x * gamma_q(k, x)?).max(0.0))
    }
}

/// Law given by an observed sample of durations. Moments are raw sample
/// moments; density queries are unsupported, survival is the empirical one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDurations {
    sorted: Vec<f64>,
    // running sums of `sorted`, for length-biased draws
    cumulative: Vec<f64>,
}

impl EmpiricalDurations {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData {
                got: samples.len(),
                need: 2,
            });
        }
        if let Some(bad) = samples.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "empirical durations must be finite and > 0, found {bad}"
            )));
        }
        samples.sort_by(f64::total_cmp);
        let cumulative = samples
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            sorted: samples,
            cumulative,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

impl DurationLaw for EmpiricalDurations {
    fn name(&self) -> &'static str {
        "empirical"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("n", self.sorted.len() as f64)]
    }

    fn pdf(&self, _tau: f64) -> f64 {
        f64::NAN
    }

    fn survival(&self, s: f64) -> f64 {
        let above = self.sorted.len() - self.sorted.partition_point(|&x| x <= s);
        above as f64 / self.sorted.len() as f64
    }

    fn raw_moment(&self, n: u32) -> Result<f64> {
        crate::fit::sample_raw_moment(&self.sorted, n)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.sorted[rng.random_range(0..self.sorted.len())]
    }

    fn sample_length_biased(&self, rng: &mut dyn RngCore) -> f64 {
        let total = *self.cumulative.last().expect("at least two samples");
        let target = total * rng.random::<f64>();
        let i = self.cumulative.partition_point(|&c| c <= target);
        self.sorted[i.min(self.sorted.len() - 1)]
    }

    fn integrated_survival(&self, s: f64) -> Result<f64> {
        // ∫_s^∞ (1/N) Σ 1[x_i > u] du = (1/N) Σ (x_i - s)_+
        let n = self.sorted.len() as f64;
        Ok(self.sorted.iter().map(|&x| (x - s).max(0.0)).sum::<f64>() / n)
    }

    fn is_empirical(&self) -> bool {
        true
    }
}

/// A duration law with domain-checked operations.
#[derive(Debug, Clone)]
pub struct DurationDistribution(Arc<dyn DurationLaw>);

impl DurationDistribution {
    pub fn new(law: impl DurationLaw + 'static) -> Self {
        Self(Arc::new(law))
    }

    pub fn from_arc(law: Arc<dyn DurationLaw>) -> Self {
        Self(law)
    }

    pub fn weibull(m: f64, a: f64) -> Result<Self> {
        Ok(Self::new(Weibull::new(m, a)?))
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Ok(Self::new(Exponential::new(mean)?))
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self::new(GammaLaw::new(shape, scale)?))
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Ok(Self::new(EmpiricalDurations::new(samples)?))
    }

    pub fn law(&self) -> &dyn DurationLaw {
        self.0.as_ref()
    }

    pub fn name(&self) -> &'static str {
        self.0.name()
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        self.0.params()
    }

    /// `name:k=v,...` form accepted by the registry.
    pub fn describe(&self) -> String {
        let params: Vec<String> = self.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}:{}", self.name(), params.join(","))
    }

    pub fn weibull_params(&self) -> Option<(f64, f64)> {
        self.0.weibull_params()
    }

    pub fn is_empirical(&self) -> bool {
        self.0.is_empirical()
    }

    pub fn pdf(&self, tau: f64) -> Result<f64> {
        check_time("pdf argument", tau)?;
        if self.is_empirical() {
            return Err(Error::Unsupported("empirical durations have no density".into()));
        }
        Ok(self.0.pdf(tau))
    }

    pub fn survival(&self, s: f64) -> Result<f64> {
        check_time("survival argument", s)?;
        Ok(self.0.survival(s))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.survival(x)?)
    }

    pub fn raw_moment(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("moment order must be >= 1".into()));
        }
        self.0.raw_moment(n)
    }

    pub fn mean(&self) -> Result<f64> {
        self.raw_moment(1)
    }

    pub fn integrated_survival(&self, s: f64) -> Result<f64> {
        check_time("integrated survival argument", s)?;
        self.0.integrated_survival(s)
    }

    /// `count` draws, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be >= 1".into()));
        }
        Ok(crate::simulate::sharded(count, seed, |_, n, rng| {
            (0..n).map(|_| self.0.sample(rng)).collect()
        }))
    }
}

pub(crate) fn check_time(what: &str, t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be >= 0, got {t}")))
    }
}

/// CDF of the `(m, a)` Weibull law.
pub fn weibull_cdf(m: f64, a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x.powf(m) / a).exp_m1()
    }
}

/// CDF of `Gamma(k, θ)`.
pub fn gamma_cdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_p(shape, x / scale).unwrap_or(f64::NAN)
    }
}
