//! Laws of the observation offset t inside a duration.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};

use super::duration::{check_time, open_unit};
use crate::error::{Error, Result};

/// Behaviour shared by every observation law.
pub trait ObservationLaw: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn params(&self) -> Vec<(&'static str, f64)>;

    /// Normalizable on `[0, ∞)`.
    fn is_proper(&self) -> bool {
        true
    }

    /// Whether `density`, `cumulative` and `derivative` are meaningful.
    fn has_density(&self) -> bool {
        true
    }

    /// The improper `P_O(t) = 1` law.
    fn is_uniform_improper(&self) -> bool {
        false
    }

    fn density(&self, t: f64) -> f64;

    /// `∫_0^t density`. Equal to `t` for the improper uniform law.
    fn cumulative(&self, t: f64) -> f64;

    /// Derivative of the density where it exists.
    fn derivative(&self, t: f64) -> f64;

    /// Jump discontinuities of the density as `(location, right - left)`.
    fn jumps(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }

    /// Right limit of the density at `t = 0`.
    fn density_at_origin(&self) -> f64 {
        self.density(0.0)
    }

    /// End of the support when bounded.
    fn support_end(&self) -> Option<f64> {
        None
    }

    /// One draw, `None` for improper laws.
    fn sample(&self, rng: &mut dyn RngCore) -> Option<f64>;
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {value}")))
    }
}

/// `P_O(t) = 1` for all `t ≥ 0`. Not normalizable; only meaningful inside
/// ratios where the normalization cancels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UniformImproper;

impl ObservationLaw for UniformImproper {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn is_proper(&self) -> bool {
        false
    }

    fn is_uniform_improper(&self) -> bool {
        true
    }

    fn density(&self, _t: f64) -> f64 {
        1.0
    }

    fn cumulative(&self, t: f64) -> f64 {
        t
    }

    fn derivative(&self, _t: f64) -> f64 {
        0.0
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> Option<f64> {
        None
    }
}

/// Exponential offset density `λ e^{-λt}` on `[0, ∞)`; the truncation to
/// `t ≤ τ` happens when it is paired with a duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedExponential {
    rate: f64,
}

impl TruncatedExponential {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Self {
            rate: positive("observation rate lambda", rate)?,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl ObservationLaw for TruncatedExponential {
    fn name(&self) -> &'static str {
        "texp"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("lambda", self.rate)]
    }

    fn density(&self, t: f64) -> f64 {
        self.rate * (-self.rate * t).exp()
    }

    fn cumulative(&self, t: f64) -> f64 {
        -(-self.rate * t).exp_m1()
    }

    fn derivative(&self, t: f64) -> f64 {
        -self.rate * self.rate * (-self.rate * t).exp()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<f64> {
        Some(-open_unit(rng).ln() / self.rate)
    }
}

/// Power-law window: density `(p+1) t^p / T^{p+1}` on `[0, T]`, zero beyond.
/// `p = 0` is the uniform law on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerWindow {
    exponent: f64,
    cutoff: f64,
}

impl PowerWindow {
    pub fn new(exponent: f64, cutoff: f64) -> Result<Self> {
        if !(exponent >= 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "window exponent p must be finite and >= 0, got {exponent}"
            )));
        }
        Ok(Self {
            exponent,
            cutoff: positive("window cutoff T", cutoff)?,
        })
    }

    fn norm(&self) -> f64 {
        (self.exponent + 1.0) / self.cutoff.powf(self.exponent + 1.0)
    }
}

impl ObservationLaw for PowerWindow {
    fn name(&self) -> &'static str {
        "window"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("p", self.exponent), ("T", self.cutoff)]
    }

    fn density(&self, t: f64) -> f64 {
        if t > self.cutoff {
            0.0
        } else if self.exponent == 0.0 {
            1.0 / self.cutoff
        } else {
            self.norm() * t.powf(self.exponent)
        }
    }

    fn cumulative(&self, t: f64) -> f64 {
        if t >= self.cutoff {
            1.0
        } else {
            (t / self.cutoff).powf(self.exponent + 1.0)
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        if t > self.cutoff || self.exponent == 0.0 {
            0.0
        } else {
            self.norm() * self.exponent * t.powf(self.exponent - 1.0)
        }
    }

    fn jumps(&self) -> Vec<(f64, f64)> {
        // density drops from (p+1)/T to 0 at the cutoff
        vec![(self.cutoff, -(self.exponent + 1.0) / self.cutoff)]
    }

    fn density_at_origin(&self) -> f64 {
        if self.exponent == 0.0 {
            1.0 / self.cutoff
        } else {
            0.0
        }
    }

    fn support_end(&self) -> Option<f64> {
        Some(self.cutoff)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<f64> {
        Some(self.cutoff * open_unit(rng).powf(1.0 / (self.exponent + 1.0)))
    }
}

/// Observation offsets given as a sample; supports resampling only.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalObservation {
    samples: Vec<f64>,
}

impl EmpiricalObservation {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData { got: 0, need: 1 });
        }
        if let Some(bad) = samples.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "observation offsets must be finite and >= 0, found {bad}"
            )));
        }
        Ok(Self { samples })
    }
}

impl ObservationLaw for EmpiricalObservation {
    fn name(&self) -> &'static str {
        "empirical"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("n", self.samples.len() as f64)]
    }

    fn has_density(&self) -> bool {
        false
    }

    fn density(&self, _t: f64) -> f64 {
        f64::NAN
    }

    fn cumulative(&self, t: f64) -> f64 {
        self.samples.iter().filter(|&&x| x <= t).count() as f64 / self.samples.len() as f64
    }

    fn derivative(&self, _t: f64) -> f64 {
        f64::NAN
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<f64> {
        Some(self.samples[rng.random_range(0..self.samples.len())])
    }
}

/// An observation law with domain-checked operations.
#[derive(Debug, Clone)]
pub struct ObservationDistribution(Arc<dyn ObservationLaw>);

impl ObservationDistribution {
    pub fn new(law: impl ObservationLaw + 'static) -> Self {
        Self(Arc::new(law))
    }

    pub fn from_arc(law: Arc<dyn ObservationLaw>) -> Self {
        Self(law)
    }

    pub fn uniform_improper() -> Self {
        Self::new(UniformImproper)
    }

    pub fn truncated_exponential(rate: f64) -> Result<Self> {
        Ok(Self::new(TruncatedExponential::new(rate)?))
    }

    pub fn power_window(exponent: f64, cutoff: f64) -> Result<Self> {
        Ok(Self::new(PowerWindow::new(exponent, cutoff)?))
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Ok(Self::new(EmpiricalObservation::new(samples)?))
    }

    pub fn law(&self) -> &dyn ObservationLaw {
        self.0.as_ref()
    }

    pub fn name(&self) -> &'static str {
        self.0.name()
    }

    pub fn describe(&self) -> String {
        let params: Vec<String> = self.0.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
        if params.is_empty() {
            self.name().to_string()
        } else {
            format!("{}:{}", self.name(), params.join(","))
        }
    }

    pub fn is_uniform_improper(&self) -> bool {
        self.0.is_uniform_improper()
    }

    pub fn is_proper(&self) -> bool {
        self.0.is_proper()
    }

    pub(crate) fn require_density(&self) -> Result<()> {
        if self.0.has_density() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "observation law '{}' has no density; only sampling is available",
                self.name()
            )))
        }
    }

    /// `P_O(t)`.
    pub fn density(&self, t: f64) -> Result<f64> {
        check_time("observation offset", t)?;
        self.require_density()?;
        Ok(self.0.density(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{integrate_finite, integrate_semi_infinite, QuadratureSpec};

    #[test]
    fn density_examples() {
        let u = ObservationDistribution::uniform_improper();
        assert_eq!(u.density(17.3).unwrap(), 1.0);
        assert!(!u.is_proper());
        let e = ObservationDistribution::truncated_exponential(1.0).unwrap();
        assert_eq!(e.density(0.0).unwrap(), 1.0);
        let w = ObservationDistribution::power_window(0.0, 2.0).unwrap();
        assert_eq!(w.density(1.0).unwrap(), 0.5);
        assert_eq!(w.density(2.5).unwrap(), 0.0);
        assert!(matches!(w.density(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn proper_laws_normalize() {
        let spec = QuadratureSpec::new(1e-13, 1e-12, 200).unwrap();
        let e = TruncatedExponential::new(2.5).unwrap();
        let r = integrate_semi_infinite(|t| e.density(t), 0.0, &spec).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
        for &(p, cut) in &[(0.0, 2.0), (0.5, 3.0), (2.0, 1.0)] {
            let w = PowerWindow::new(p, cut).unwrap();
            let r = integrate_finite(|t| w.density(t), 0.0, cut, &spec).unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "p={p}");
            assert!((w.cumulative(0.7 * cut) - integrate_finite(|t| w.density(t), 0.0, 0.7 * cut, &spec).unwrap().value).abs() < 1e-9);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let e = TruncatedExponential::new(1.7).unwrap();
        let w = PowerWindow::new(1.5, 2.0).unwrap();
        let h = 1e-6;
        for &t in &[0.2, 0.9, 1.6] {
            let fd = (e.density(t + h) - e.density(t - h)) / (2.0 * h);
            assert!((fd - e.derivative(t)).abs() < 1e-6);
            let fd = (w.density(t + h) - w.density(t - h)) / (2.0 * h);
            assert!((fd - w.derivative(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ObservationDistribution::truncated_exponential(0.0).is_err());
        assert!(ObservationDistribution::power_window(-1.0, 1.0).is_err());
        assert!(ObservationDistribution::power_window(1.0, 0.0).is_err());
        assert!(ObservationDistribution::empirical(vec![]).is_err());
        assert!(ObservationDistribution::empirical(vec![-1.0]).is_err());
    }

    #[test]
    fn empirical_has_no_density() {
        let o = ObservationDistribution::empirical(vec![0.5, 1.0]).unwrap();
        assert!(matches!(o.density(0.5), Err(Error::Unsupported(_))));
    }
}
