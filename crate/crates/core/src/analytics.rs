//! Waiting-time distribution Ω(s), its moments, the δₙ corrections and the
//! inspection-paradox diagnosis.
//!
//! With durations τ ~ `P_W` and observation offsets t ~ `P_O` (restricted to
//! `t ≤ τ`), the waiting time `s = τ - t` has density
//!
//! ```text
//! Ω(s) = g(s) / D,   g(s) = ∫_s^∞ P_W(τ) P_O(τ - s) dτ,   D = ∫_0^∞ g(s) ds.
//! ```
//!
//! For the improper uniform offset `P_O = 1` this reduces to the forward
//! recurrence density `S(s)/E(τ)`, with `w = E(τ²)/2E(τ)` and
//! `σ² = (4E(τ³)E(τ) - 3E(τ²)²) / 12E(τ)²`.
//!
//! For a general offset law, integrating `g` by parts gives
//! `∫ s^{n-1} g(s) ds = P_O(0) E(τⁿ)/n - δₙ` with
//! `δₙ = ∫_0^∞ (sⁿ/n) ∫_s^∞ P_W(τ) ∂_s P_O(τ - s) dτ ds`, where the
//! derivative includes the jump discontinuities of `P_O`. With `P_O(0) = 1`
//! this is the familiar `⟨s⟩ = (E(τ²)/2 - δ₂)/(E(τ) - δ₁)` form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DurationDistribution, ObservationDistribution};
use crate::error::{Error, Result};
use crate::special::{gamma_unchecked, integrate_finite, integrate_semi_infinite, integrate_wedge, ln_gamma_unchecked, QuadratureSpec};

/// Relative tolerance between a closed form and its moment-ratio formula.
pub const CLOSED_FORM_TOL: f64 = 1e-10;
/// Relative tolerance between the direct Ω moments and the δₙ formulas.
pub const CROSS_CHECK_TOL: f64 = 1e-6;
/// Relative noise floor below which `w - E(τ)` counts as zero.
pub const PARADOX_NOISE: f64 = 1e-12;
/// Negative radicands of the σ formula above this (relative) size are errors.
pub const RADICAND_TOL: f64 = 1e-12;

/// How a [`WaitingTimeAnalysis`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// Waiting-time summary for one (duration, observation) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingTimeAnalysis {
    /// ⟨s⟩
    pub mean_wait: f64,
    /// ⟨s²⟩
    pub second_moment: f64,
    pub std: f64,
    /// E(τ)
    pub mean_duration: f64,
    /// δ₁..δ₃; `None` when not estimated (Monte Carlo runs).
    pub delta: Option<[f64; 3]>,
    /// `mean_wait > mean_duration`
    pub paradox: bool,
    pub method: Method,
}

impl WaitingTimeAnalysis {
    pub(crate) fn check_invariants(&self) -> Result<()> {
        if !(self.std >= 0.0) {
            return Err(Error::Numeric(format!("negative or NaN std {}", self.std)));
        }
        let slack = 1e-9 * self.second_moment.abs();
        if self.second_moment + slack < self.mean_wait * self.mean_wait {
            return Err(Error::Numeric(format!(
                "second moment {} below squared mean {}",
                self.second_moment,
                self.mean_wait * self.mean_wait
            )));
        }
        Ok(())
    }
}

/// `x > y` beyond relative floating-point noise.
pub(crate) fn exceeds(x: f64, y: f64) -> bool {
    x - y > PARADOX_NOISE * y.abs().max(x.abs())
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn cross_check(quantity: &str, primary: f64, check: f64, tol: f64) -> Result<()> {
    if rel_diff(primary, check) <= tol {
        Ok(())
    } else {
        Err(Error::CrossCheck {
            quantity: quantity.to_string(),
            primary,
            check,
        })
    }
}

/// Γ(x)/Γ(y), through logarithms when either argument is large.
fn gamma_ratio(x: f64, y: f64) -> f64 {
    if x < 170.0 && y < 170.0 {
        gamma_unchecked(x) / gamma_unchecked(y)
    } else {
        (ln_gamma_unchecked(x) - ln_gamma_unchecked(y)).exp()
    }
}

fn positive_mean(d: &DurationDistribution) -> Result<f64> {
    let e1 = d.raw_moment(1)?;
    if !(e1 > 0.0) || !e1.is_finite() {
        return Err(Error::InvalidParameter(format!("mean duration must be finite and > 0, got {e1}")));
    }
    Ok(e1)
}

// ---------------------------------------------------------------------------
// Uniform observation
// ---------------------------------------------------------------------------

/// Ω(s) = S(s)/E(τ) under uniform observation.
pub fn waiting_pdf_uniform(d: &DurationDistribution, s: f64) -> Result<f64> {
    let e1 = positive_mean(d)?;
    Ok(d.survival(s)? / e1)
}

/// Weibull closed form `a^{1/m} Γ(2/m)/Γ(1/m)`.
pub fn weibull_mean_wait(m: f64, a: f64) -> f64 {
    a.powf(1.0 / m) * gamma_ratio(2.0 / m, 1.0 / m)
}

/// Weibull closed form `a^{1/m} √(Γ(1/m)Γ(3/m) - Γ(2/m)²) / Γ(1/m)`.
pub fn weibull_std_wait(m: f64, a: f64) -> f64 {
    let r2 = gamma_ratio(2.0 / m, 1.0 / m);
    let r3 = gamma_ratio(3.0 / m, 1.0 / m);
    a.powf(1.0 / m) * (r3 - r2 * r2).max(0.0).sqrt()
}

/// Weibull closed form of Ω(s): `m e^{-s^m/a} / (a^{1/m} Γ(1/m))`.
pub fn weibull_waiting_pdf(m: f64, a: f64, s: f64) -> f64 {
    m * (-s.powf(m) / a).exp() / (a.powf(1.0 / m) * gamma_unchecked(1.0 / m))
}

/// `E(τ²)/2E(τ)`.
pub fn mean_wait_from_moments(e1: f64, e2: f64) -> f64 {
    e2 / (2.0 * e1)
}

/// Radicand `(4E(τ³)E(τ) - 3E(τ²)²) / 12E(τ)²` of the waiting-time variance,
/// unclamped.
pub fn variance_radicand(e1: f64, e2: f64, e3: f64) -> f64 {
    (4.0 * e3 * e1 - 3.0 * e2 * e2) / (12.0 * e1 * e1)
}

/// Standard deviation from duration moments; tiny negative radicands are
/// clamped to zero, larger ones reported.
pub fn std_wait_from_moments(e1: f64, e2: f64, e3: f64) -> Result<f64> {
    let radicand = variance_radicand(e1, e2, e3);
    let scale = 4.0 * e3 * e1 / (12.0 * e1 * e1);
    if radicand < -RADICAND_TOL * scale.abs() {
        return Err(Error::Numeric(format!(
            "negative variance radicand {radicand:e} (moments {e1}, {e2}, {e3})"
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Mean waiting time `w` under uniform observation. Weibull laws return the
/// closed form after checking it against the moment ratio.
pub fn mean_waiting_uniform(d: &DurationDistribution) -> Result<f64> {
    let e1 = positive_mean(d)?;
    let ratio = mean_wait_from_moments(e1, d.raw_moment(2)?);
    if let Some((m, a)) = d.weibull_params() {
        let closed = weibull_mean_wait(m, a);
        cross_check("weibull mean wait", closed, ratio, CLOSED_FORM_TOL)?;
        return Ok(closed);
    }
    Ok(ratio)
}

/// Waiting-time standard deviation under uniform observation.
pub fn std_waiting_uniform(d: &DurationDistribution) -> Result<f64> {
    let e1 = positive_mean(d)?;
    let from_moments = std_wait_from_moments(e1, d.raw_moment(2)?, d.raw_moment(3)?)?;
    if let Some((m, a)) = d.weibull_params() {
        let closed = weibull_std_wait(m, a);
        cross_check("weibull waiting std", closed, from_moments, CLOSED_FORM_TOL)?;
        return Ok(closed);
    }
    Ok(from_moments)
}

/// Uniform-observation analysis from duration moments (closed forms for
/// Weibull laws).
pub fn analyze_uniform(d: &DurationDistribution) -> Result<WaitingTimeAnalysis> {
    let e1 = positive_mean(d)?;
    let w = mean_waiting_uniform(d)?;
    let sigma = std_waiting_uniform(d)?;
    let analysis = WaitingTimeAnalysis {
        mean_wait: w,
        second_moment: d.raw_moment(3)? / (3.0 * e1),
        std: sigma,
        mean_duration: e1,
        delta: Some([0.0; 3]),
        paradox: exceeds(w, e1),
        method: if d.is_empirical() { Method::MonteCarlo } else { Method::ClosedForm },
    };
    analysis.check_invariants()?;
    Ok(analysis)
}

// ---------------------------------------------------------------------------
// General observation
// ---------------------------------------------------------------------------

/// Reading of the derivative inside δₙ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaConvention {
    /// Double integral of `sⁿ/n · P_W(τ) · ∂_s P_O(τ - s)` over the wedge,
    /// with `∂_s P_O(τ - s) = -P_O'(τ - s)` plus jump terms.
    Literal,
    /// `P_O(0) E(τⁿ)/n - ∫ s^{n-1} g(s) ds`, the integration-by-parts identity.
    ByParts,
}

/// Quadrature settings used for the double integrals of the general case.
pub fn default_analytics_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-12,
        rel_tol: 1e-11,
        max_subdivisions: 600,
        ..QuadratureSpec::default()
    }
}

fn require_density(d: &DurationDistribution, o: &ObservationDistribution) -> Result<()> {
    if d.is_empirical() {
        return Err(Error::Unsupported(
            "general waiting-time analysis needs a duration density; empirical durations only support uniform observation".into(),
        ));
    }
    o.require_density()
}

/// `∫_0^∞ ds sᵏ ∫_s^∞ dτ P_W(τ) P_O(τ - s)`.
fn numerator_moment(d: &DurationDistribution, o: &ObservationDistribution, k: i32, spec: &QuadratureSpec) -> Result<f64> {
    let pw = d.law();
    let po = o.law();
    let r = integrate_wedge(
        |s, tau| {
            let p = pw.pdf(tau);
            if p == 0.0 {
                return 0.0;
            }
            s.powi(k) * p * po.density(tau - s)
        },
        po.support_end(),
        spec,
    )?;
    Ok(r.value)
}

/// δₙ for `n ∈ 1..=3` under the given derivative convention. Exactly zero,
/// without quadrature, for the improper uniform law.
pub fn delta_n_with(
    d: &DurationDistribution,
    o: &ObservationDistribution,
    n: u32,
    convention: DeltaConvention,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(Error::Domain(format!("delta order must be in 1..=3, got {n}")));
    }
    if o.is_uniform_improper() {
        return Ok(0.0);
    }
    require_density(d, o)?;
    let nf = n as f64;
    match convention {
        DeltaConvention::Literal => {
            let pw = d.law();
            let po = o.law();
            let smooth = integrate_wedge(
                |s, tau| {
                    let p = pw.pdf(tau);
                    if p == 0.0 {
                        return 0.0;
                    }
                    -(s.powi(n as i32) / nf) * p * po.derivative(tau - s)
                },
                po.support_end(),
                spec,
            )?
            .value;
            let mut jumps = 0.0;
            for (at, size) in po.jumps() {
                let r = integrate_semi_infinite(|s| (s.powi(n as i32) / nf) * pw.pdf(s + at), 0.0, spec)?;
                jumps -= size * r.value;
            }
            Ok(smooth + jumps)
        }
        DeltaConvention::ByParts => {
            let boundary = o.law().density_at_origin() * d.raw_moment(n)? / nf;
            Ok(boundary - numerator_moment(d, o, n as i32 - 1, spec)?)
        }
    }
}

/// δₙ with the literal convention, falling back to the by-parts form when
/// the derivative is too singular for the double quadrature to converge
/// (window exponents in `(0, 1)`).
pub fn delta_n(d: &DurationDistribution, o: &ObservationDistribution, n: u32) -> Result<f64> {
    delta_n_robust(d, o, n, &default_analytics_spec())
}

fn delta_n_robust(d: &DurationDistribution, o: &ObservationDistribution, n: u32, spec: &QuadratureSpec) -> Result<f64> {
    match delta_n_with(d, o, n, DeltaConvention::Literal, spec) {
        Err(Error::Quadrature { estimate, .. }) => {
            log::warn!(
                "literal delta_{n} did not converge for {} / {} (estimate {estimate:e}); using the by-parts form",
                d.describe(),
                o.describe()
            );
            delta_n_with(d, o, n, DeltaConvention::ByParts, spec)
        }
        r => r,
    }
}

/// A waiting-time law that can be evaluated pointwise.
pub trait WaitingLaw: Sync {
    fn pdf(&self, s: f64) -> Result<f64>;

    /// P(wait > s).
    fn survival(&self, s: f64) -> Result<f64>;

    fn cdf(&self, s: f64) -> Result<f64> {
        Ok(1.0 - self.survival(s)?)
    }
}

/// Ω under uniform observation: `S(s)/E(τ)`, survival `∫_s^∞ S / E(τ)`.
#[derive(Debug, Clone)]
pub struct UniformWaitingLaw {
    duration: DurationDistribution,
    mean: f64,
}

impl UniformWaitingLaw {
    pub fn new(duration: &DurationDistribution) -> Result<Self> {
        Ok(Self {
            mean: positive_mean(duration)?,
            duration: duration.clone(),
        })
    }
}

impl WaitingLaw for UniformWaitingLaw {
    fn pdf(&self, s: f64) -> Result<f64> {
        Ok(self.duration.survival(s)? / self.mean)
    }

    fn survival(&self, s: f64) -> Result<f64> {
        Ok((self.duration.integrated_survival(s)? / self.mean).clamp(0.0, 1.0))
    }
}

/// Ω for an arbitrary observation law with a density.
#[derive(Debug, Clone)]
pub struct GeneralWaitingLaw {
    duration: DurationDistribution,
    observation: ObservationDistribution,
    normalizer: f64,
    spec: QuadratureSpec,
}

impl GeneralWaitingLaw {
    /// Computes the normalizer `D = ∫∫_{s≤τ} P_W(τ) P_O(τ-s)` directly as a
    /// double integral and checks it against `∫ P_W(τ) F_O(τ) dτ`.
    pub fn new(d: &DurationDistribution, o: &ObservationDistribution) -> Result<Self> {
        Self::with_spec(d, o, default_analytics_spec())
    }

    pub fn with_spec(d: &DurationDistribution, o: &ObservationDistribution, spec: QuadratureSpec) -> Result<Self> {
        require_density(d, o)?;
        positive_mean(d)?;
        let normalizer = numerator_moment(d, o, 0, &spec)?;
        if !(normalizer > 0.0) || !normalizer.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "waiting-time normalizer is {normalizer}; duration and observation supports are incompatible"
            )));
        }
        let law = Self {
            duration: d.clone(),
            observation: o.clone(),
            normalizer,
            spec,
        };
        let swapped = law.tail_numerator(0.0)?;
        cross_check("waiting-time normalizer", normalizer, swapped, CROSS_CHECK_TOL)?;
        Ok(law)
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// `g(s) = ∫_s^∞ P_W(τ) P_O(τ - s) dτ`.
    pub fn numerator(&self, s: f64) -> Result<f64> {
        let pw = self.duration.law();
        let po = self.observation.law();
        let f = |tau: f64| {
            let p = pw.pdf(tau);
            if p == 0.0 {
                0.0
            } else {
                p * po.density(tau - s)
            }
        };
        let r = match po.support_end() {
            Some(end) => integrate_finite(f, s, s + end, &self.spec)?,
            None => integrate_semi_infinite(f, s, &self.spec)?,
        };
        Ok(r.value)
    }

    /// `∫_s^∞ g(u) du = ∫_s^∞ P_W(τ) F_O(τ - s) dτ`.
    fn tail_numerator(&self, s: f64) -> Result<f64> {
        let pw = self.duration.law();
        let po = self.observation.law();
        let f = |tau: f64| {
            let p = pw.pdf(tau);
            if p == 0.0 {
                0.0
            } else {
                p * po.cumulative(tau - s)
            }
        };
        let r = match po.support_end() {
            Some(end) => integrate_finite(f, s, s + end, &self.spec)?.value + self.duration.law().survival(s + end),
            None => integrate_semi_infinite(f, s, &self.spec)?.value,
        };
        Ok(r)
    }
}

impl WaitingLaw for GeneralWaitingLaw {
    fn pdf(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("waiting time must be >= 0, got {s}")));
        }
        Ok(self.numerator(s)? / self.normalizer)
    }

    fn survival(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("waiting time must be >= 0, got {s}")));
        }
        Ok((self.tail_numerator(s)? / self.normalizer).clamp(0.0, 1.0))
    }
}

/// Ω(s) for a general observation law.
pub fn waiting_pdf_general(d: &DurationDistribution, o: &ObservationDistribution, s: f64) -> Result<f64> {
    GeneralWaitingLaw::new(d, o)?.pdf(s)
}

/// σ from δ-corrected moments:
/// `√[(4E₃E₁ - 3E₂² + G) / 12(E₁ - δ₁)²]`, where `Eₙ` carry the `P_O(0)`
/// factor and `G = -4δ₁E₃ - 12δ₃E₁ + 12δ₂E₂ + 12δ₁δ₃ - 12δ₂²`.
pub fn std_from_deltas(e: [f64; 3], delta: [f64; 3]) -> Result<f64> {
    let [e1, e2, e3] = e;
    let [d1, d2, d3] = delta;
    let g = -4.0 * d1 * e3 - 12.0 * d3 * e1 + 12.0 * d2 * e2 + 12.0 * d1 * d3 - 12.0 * d2 * d2;
    let numerator = 4.0 * e3 * e1 - 3.0 * e2 * e2 + g;
    let denom = 12.0 * (e1 - d1).powi(2);
    let radicand = numerator / denom;
    let scale = (4.0 * e3 * e1).abs() / denom;
    if radicand < -RADICAND_TOL * scale {
        return Err(Error::Numeric(format!("negative variance radicand {radicand:e}")));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Moments of Ω for a general observation law.
///
/// `⟨s⟩` and `⟨s²⟩` come from direct quadrature of `∫ sⁿ Ω(s) ds`; the
/// δ-corrected ratios are computed alongside and must agree to
/// [`CROSS_CHECK_TOL`]. σ is the δ-corrected form.
pub fn waiting_moments_general(d: &DurationDistribution, o: &ObservationDistribution) -> Result<WaitingTimeAnalysis> {
    waiting_moments_general_with(d, o, &default_analytics_spec())
}

pub fn waiting_moments_general_with(
    d: &DurationDistribution,
    o: &ObservationDistribution,
    spec: &QuadratureSpec,
) -> Result<WaitingTimeAnalysis> {
    let law = GeneralWaitingLaw::with_spec(d, o, *spec)?;
    let norm = law.normalizer();
    let m1 = numerator_moment(d, o, 1, spec)? / norm;
    let m2 = numerator_moment(d, o, 2, spec)? / norm;

    let origin = if o.is_uniform_improper() { 1.0 } else { o.law().density_at_origin() };
    let e1 = positive_mean(d)?;
    let e = [origin * e1, origin * d.raw_moment(2)?, origin * d.raw_moment(3)?];
    let mut delta = [0.0; 3];
    for (n, slot) in delta.iter_mut().enumerate() {
        *slot = delta_n_robust(d, o, n as u32 + 1, spec)?;
    }
    let denom = e[0] - delta[0];
    cross_check("normalizer vs P_O(0)E(tau) - delta_1", norm, denom, CROSS_CHECK_TOL)?;
    cross_check("mean wait (direct vs delta form)", m1, (e[1] / 2.0 - delta[1]) / denom, CROSS_CHECK_TOL)?;
    cross_check("second moment (direct vs delta form)", m2, (e[2] / 3.0 - delta[2]) / denom, CROSS_CHECK_TOL)?;

    let sigma = std_from_deltas(e, delta)?;
    let direct_var = m2 - m1 * m1;
    if (sigma * sigma - direct_var).abs() > CROSS_CHECK_TOL * m2 {
        return Err(Error::CrossCheck {
            quantity: "waiting variance (direct vs delta form)".into(),
            primary: direct_var,
            check: sigma * sigma,
        });
    }
    let analysis = WaitingTimeAnalysis {
        mean_wait: m1,
        second_moment: m2,
        std: sigma,
        mean_duration: e1,
        delta: Some(delta),
        paradox: exceeds(m1, e1),
        method: Method::Quadrature,
    };
    analysis.check_invariants()?;
    Ok(analysis)
}

/// Closed forms for uniform observation, quadrature otherwise.
pub fn analyze(d: &DurationDistribution, o: &ObservationDistribution) -> Result<WaitingTimeAnalysis> {
    if o.is_uniform_improper() {
        analyze_uniform(d)
    } else {
        waiting_moments_general(d, o)
    }
}

/// The waiting-time law matching `analyze`.
pub fn waiting_law(d: &DurationDistribution, o: &ObservationDistribution) -> Result<Box<dyn WaitingLaw>> {
    if o.is_uniform_improper() {
        Ok(Box::new(UniformWaitingLaw::new(d)?))
    } else {
        Ok(Box::new(GeneralWaitingLaw::new(d, o)?))
    }
}

// ---------------------------------------------------------------------------
// Inspection paradox
// ---------------------------------------------------------------------------

/// `(w - E(τ), w > E(τ))` under uniform observation. The flag is computed
/// both from the gap and from `E(τ²) > 2E(τ)²`; the two must agree.
pub fn inspection_gap(d: &DurationDistribution) -> Result<(f64, bool)> {
    let e1 = positive_mean(d)?;
    let e2 = d.raw_moment(2)?;
    let w = mean_waiting_uniform(d)?;
    let gap = w - e1;
    let by_gap = exceeds(w, e1);
    let by_moments = exceeds(e2, 2.0 * e1 * e1);
    if by_gap != by_moments {
        return Err(Error::CrossCheck {
            quantity: "paradox predicate (gap vs second moment)".into(),
            primary: gap,
            check: e2 - 2.0 * e1 * e1,
        });
    }
    Ok((if by_gap || exceeds(e1, w) { gap } else { 0.0 }, by_gap))
}

/// One row of a Weibull shape sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: f64,
    pub mean_duration: f64,
    pub mean_wait: f64,
    pub paradox: bool,
}

/// Mean duration against mean wait for Weibull laws with fixed `a` over a
/// grid of shapes. Rows come back in grid order.
pub fn paradox_sweep(a: f64, m_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if m_grid.is_empty() {
        return Err(Error::InvalidParameter("shape grid is empty".into()));
    }
    m_grid
        .par_iter()
        .map(|&m| {
            let d = DurationDistribution::weibull(m, a)?;
            let (_, paradox) = inspection_gap(&d)?;
            Ok(SweepRow {
                m,
                mean_duration: d.mean()?,
                mean_wait: mean_waiting_uniform(&d)?,
                paradox,
            })
        })
        .collect()
}

/// `points` nodes on `[0, s_max]`, quadratically graded towards 0.
pub fn curve_grid(s_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!("curve needs at least 2 points, got {points}")));
    }
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::InvalidParameter(format!("curve range must be positive, got {s_max}")));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| s_max * (i as f64 / last).powi(2)).collect())
}

/// Samples of Ω on `curve_grid(s_max, points)` together with the exact mass
/// beyond `s_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaCurve {
    pub s: Vec<f64>,
    pub omega: Vec<f64>,
    pub tail_mass: f64,
}

impl OmegaCurve {
    pub fn trapezoid_mass(&self) -> f64 {
        self.s
            .windows(2)
            .zip(self.omega.windows(2))
            .map(|(s, o)| 0.5 * (s[1] - s[0]) * (o[0] + o[1]))
            .sum()
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn value_at(&self, s: f64) -> Option<f64> {
        let i = self.s.partition_point(|&x| x <= s);
        if i == 0 || i > self.s.len() {
            return None;
        }
        if i == self.s.len() {
            return (self.s[i - 1] == s).then(|| self.omega[i - 1]);
        }
        let (s0, s1) = (self.s[i - 1], self.s[i]);
        let t = (s - s0) / (s1 - s0);
        Some(self.omega[i - 1] * (1.0 - t) + self.omega[i] * t)
    }
}

pub fn omega_curve(law: &dyn WaitingLaw, s_max: f64, points: usize) -> Result<OmegaCurve> {
    let s = curve_grid(s_max, points)?;
    let omega = s
        .par_iter()
        .map(|&x| law.pdf(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(OmegaCurve {
        tail_mass: law.survival(s_max)?,
        s,
        omega,
    })
}
