//! Weibull fitting of duration samples and sample-moment waiting-time
//! estimates.
//!
//! Weibull laws use the parameterization `P_W(τ) = (m/a) τ^{m-1} e^{-τ^m/a}`;
//! the conventional scale is `λ = a^{1/m}`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{exceeds, mean_wait_from_moments, variance_radicand, Method, WaitingTimeAnalysis};
use crate::distributions::{weibull_cdf, DurationDistribution};
use crate::error::{Error, Result};
use crate::simulate::{ks_distance, stream_rng};

/// Score tolerance of the shape equation.
pub const SCORE_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;
/// Fewest samples accepted by [`fit_weibull`].
pub const MIN_FIT_SAMPLES: usize = 10;
/// Below this many samples the KS test is flagged as low power.
pub const LOW_POWER_SAMPLES: usize = 50;

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `(1/N) Σ τᵢⁿ`.
pub fn sample_raw_moment(taus: &[f64], n: u32) -> Result<f64> {
    if taus.is_empty() {
        return Err(Error::Empty);
    }
    if n == 0 {
        return Err(Error::Domain("moment order must be >= 1".into()));
    }
    Ok(compensated_sum(taus.iter().map(|t| t.powi(n as i32))) / taus.len() as f64)
}

fn check_durations(taus: &[f64], need: usize) -> Result<()> {
    if taus.len() < need {
        return Err(Error::InsufficientData { got: taus.len(), need });
    }
    if let Some(&bad) = taus.iter().find(|&&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(format!("durations must be finite and > 0, found {bad}")));
    }
    Ok(())
}

/// Uniform-observation `w` and `σ` with E(τⁿ) replaced by sample moments.
/// A negative variance radicand is reported rather than clamped.
pub fn empirical_waiting_stats_from_durations(taus: &[f64]) -> Result<WaitingTimeAnalysis> {
    check_durations(taus, 2)?;
    let e1 = sample_raw_moment(taus, 1)?;
    let e2 = sample_raw_moment(taus, 2)?;
    let e3 = sample_raw_moment(taus, 3)?;
    let radicand = variance_radicand(e1, e2, e3);
    if radicand < 0.0 {
        return Err(Error::Numeric(format!(
            "sample moments give a negative waiting-time variance ({radicand:e}); the sample is dominated by its largest durations"
        )));
    }
    let w = mean_wait_from_moments(e1, e2);
    Ok(WaitingTimeAnalysis {
        mean_wait: w,
        second_moment: e3 / (3.0 * e1),
        std: radicand.sqrt(),
        mean_duration: e1,
        delta: Some([0.0; 3]),
        paradox: exceeds(w, e1),
        method: Method::MonteCarlo,
    })
}

/// Maximum-likelihood Weibull fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub m_hat: f64,
    pub a_hat: f64,
    pub log_likelihood: f64,
    pub n: usize,
    /// Approximate standard errors of (m, a) from the observed information.
    pub stderr: (f64, f64),
}

impl FitResult {
    pub fn distribution(&self) -> Result<DurationDistribution> {
        DurationDistribution::weibull(self.m_hat, self.a_hat)
    }

    /// Conventional scale `λ = a^{1/m}`.
    pub fn scale(&self) -> f64 {
        self.a_hat.powf(1.0 / self.m_hat)
    }
}

/// `(m, a)` from conventional `(shape, λ)`.
pub fn from_shape_scale(shape: f64, scale: f64) -> (f64, f64) {
    (shape, scale.powf(shape))
}

/// Conventional `(shape, λ)` from `(m, a)`.
pub fn to_shape_scale(m: f64, a: f64) -> (f64, f64) {
    (m, a.powf(1.0 / m))
}

/// The shape equation `Σ yᵏ ln y / Σ yᵏ - 1/k - mean(ln y)` and its
/// derivative, with `y = τ/max τ` (the equation is scale invariant).
struct ShapeEquation {
    logs: Vec<f64>,
    mean_log: f64,
}

impl ShapeEquation {
    fn new(taus: &[f64]) -> Self {
        let max = taus.iter().copied().fold(f64::MIN, f64::max);
        let logs: Vec<f64> = taus.iter().map(|t| (t / max).ln()).collect();
        let mean_log = compensated_sum(logs.iter().copied()) / logs.len() as f64;
        Self { logs, mean_log }
    }

    fn eval(&self, k: f64) -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &self.logs {
            let p = (k * l).exp();
            s0 += p;
            s1 += p * l;
            s2 += p * l * l;
        }
        let r = s1 / s0;
        (r - 1.0 / k - self.mean_log, s2 / s0 - r * r + 1.0 / (k * k))
    }
}

fn solve_shape(taus: &[f64]) -> Result<f64> {
    let eq = ShapeEquation::new(taus);
    let (mut lo, mut hi) = (0.5, 2.0);
    let mut iterations = 0;
    while eq.eval(lo).0 > 0.0 {
        lo *= 0.5;
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations, lo, hi });
        }
    }
    while eq.eval(hi).0 < 0.0 {
        hi *= 2.0;
        iterations += 1;
        if iterations > MAX_ITERATIONS || hi > 1e6 {
            return Err(Error::Unidentifiable);
        }
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..MAX_ITERATIONS {
        let (h, dh) = eq.eval(k);
        if h.abs() < SCORE_TOL {
            return Ok(k);
        }
        if h < 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let newton = k - h / dh;
        k = if newton > lo && newton < hi && dh > 0.0 { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 4.0 * f64::EPSILON * hi {
            return Ok(k);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        lo,
        hi,
    })
}

/// Log-likelihood and observed information of the sample at `(m, a)`.
fn likelihood(taus: &[f64], m: f64, a: f64) -> (f64, [[f64; 2]; 2]) {
    let n = taus.len() as f64;
    let sum_log = compensated_sum(taus.iter().map(|t| t.ln()));
    let pow: Vec<f64> = taus.iter().map(|t| t.powf(m)).collect();
    let s0 = compensated_sum(pow.iter().copied());
    let s1 = compensated_sum(pow.iter().zip(taus).map(|(p, t)| p * t.ln()));
    let s2 = compensated_sum(pow.iter().zip(taus).map(|(p, t)| p * t.ln().powi(2)));
    let ll = n * m.ln() - n * a.ln() + (m - 1.0) * sum_log - s0 / a;
    let imm = n / (m * m) + s2 / a;
    let iaa = -n / (a * a) + 2.0 * s0 / (a * a * a);
    let ima = -s1 / (a * a);
    (ll, [[imm, ima], [ima, iaa]])
}

/// Maximum-likelihood fit of `(m, a)`: the shape equation is solved by
/// bracketing with safeguarded Newton steps, then `a = mean(τ^m)`.
pub fn fit_weibull(taus: &[f64]) -> Result<FitResult> {
    check_durations(taus, MIN_FIT_SAMPLES)?;
    if taus.iter().all(|&t| t == taus[0]) {
        return Err(Error::Unidentifiable);
    }
    let m = solve_shape(taus)?;
    let a = sample_raw_moment_real(taus, m);
    let (log_likelihood, info) = likelihood(taus, m, a);
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    if !(det > 0.0) {
        return Err(Error::Numeric(format!("observed information is not positive definite (det {det:e})")));
    }
    let stderr = ((info[1][1] / det).sqrt(), (info[0][0] / det).sqrt());
    Ok(FitResult {
        m_hat: m,
        a_hat: a,
        log_likelihood,
        n: taus.len(),
        stderr,
    })
}

fn sample_raw_moment_real(taus: &[f64], p: f64) -> f64 {
    compensated_sum(taus.iter().map(|t| t.powf(p))) / taus.len() as f64
}

/// Standard errors of `(m, a)` from `replicates` bootstrap refits.
pub fn bootstrap_stderr(taus: &[f64], replicates: usize, seed: u64) -> Result<(f64, f64)> {
    if replicates < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least 2 replicates".into()));
    }
    let fits = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let resample: Vec<f64> = (0..taus.len()).map(|_| taus[rng.random_range(0..taus.len())]).collect();
            fit_weibull(&resample)
        })
        .collect::<Result<Vec<_>>>()?;
    let sd = |xs: Vec<f64>| -> f64 {
        let n = xs.len() as f64;
        let mean = compensated_sum(xs.iter().copied()) / n;
        (compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1.0)).sqrt()
    };
    Ok((sd(fits.iter().map(|f| f.m_hat).collect()), sd(fits.iter().map(|f| f.a_hat).collect())))
}

/// KS test of a sample against a fitted Weibull law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodnessOfFit {
    pub ks: f64,
    /// `1.63/√N`, the asymptotic 1% critical value for a fully specified law;
    /// conservative when parameters were estimated from the same data.
    pub threshold: f64,
    pub pass: bool,
    /// Fewer than [`LOW_POWER_SAMPLES`] points.
    pub low_power: bool,
}

pub fn goodness_of_fit(taus: &[f64], fit: &FitResult) -> Result<GoodnessOfFit> {
    check_durations(taus, 2)?;
    let (m, a) = (fit.m_hat, fit.a_hat);
    let ks = ks_distance(taus, |x| weibull_cdf(m, a, x))?;
    let threshold = 1.63 / (taus.len() as f64).sqrt();
    Ok(GoodnessOfFit {
        ks,
        threshold,
        pass: ks <= threshold,
        low_power: taus.len() < LOW_POWER_SAMPLES,
    })
}
