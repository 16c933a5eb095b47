//! Duration laws `P_W(τ)` and observation laws `P_O(t)`.

mod duration;
mod observation;
mod registry;

pub use duration::{
    gamma_cdf, weibull_cdf, DurationDistribution, DurationLaw, EmpiricalDurations, Exponential, GammaLaw, Weibull,
};
pub use observation::{
    EmpiricalObservation, ObservationDistribution, ObservationLaw, PowerWindow, TruncatedExponential,
    UniformImproper,
};
pub use registry::{parse_law_spec, DurationRegistry, LawArgs, ObservationRegistry};
