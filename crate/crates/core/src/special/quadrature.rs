//! Adaptive Gauss–Kronrod quadrature on finite, semi-infinite and wedge domains.
//!
//! Finite intervals use a globally adaptive 21-point Kronrod rule (the
//! worst interval is bisected until the summed error estimate meets the
//! tolerance). Semi-infinite domains are mapped onto a finite or log-scaled
//! coordinate first, see [`TailTransform`].

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variable transform used for `[lower, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TailTransform {
    /// `t = lower + e^v` over a range of `v` found by probing outwards.
    /// Integrable power singularities at `lower` become exponentially
    /// decaying in `v`, and algebraic or stretched-exponential tails stay
    /// well resolved.
    #[default]
    LogMap,
    /// `t = lower - ln u` for `u ∈ (0, 1]`. Only suitable for integrands
    /// decaying at least like `e^{-t}`.
    ExpSubstitution,
}

/// Tolerances and limits for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of interval bisections.
    pub max_subdivisions: usize,
    pub tail_transform: TailTransform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 200,
            tail_transform: TailTransform::LogMap,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_transform(mut self, transform: TailTransform) -> Self {
        self.tail_transform = transform;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerances must be strictly positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Tolerance for an inner integral nested inside an outer one.
    fn tightened(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value of an integral together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    // max-heap on error; ties broken by position so the order is total
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Segment {
        a,
        b,
        value,
        error,
        abs_value: res_abs,
    }
}

/// Globally adaptive integration over an initial partition `breaks`
/// (sorted, at least two points).
fn adaptive<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], spec: &QuadratureSpec) -> Result<Integral> {
    let mut heap: BinaryHeap<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk21(f, w[0], w[1]))
        .collect();
    // segments too narrow to split any further
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut splits = 0;
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum::<f64>() + frozen_value;
        let error: f64 = heap.iter().map(|s| s.error).sum::<f64>() + frozen_error;
        if error <= spec.target(value) {
            return Ok(Integral { value, error });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => {
                return Err(Error::Quadrature {
                    estimate: value,
                    error_bound: error,
                    subdivisions: splits,
                })
            }
        };
        if splits >= spec.max_subdivisions {
            heap.push(worst);
            return Err(Error::Quadrature {
                estimate: value,
                error_bound: error,
                subdivisions: splits,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let width_floor = 100.0 * f64::EPSILON * (worst.a.abs().max(worst.b.abs())).max(f64::MIN_POSITIVE);
        if worst.b - worst.a <= width_floor || mid <= worst.a || mid >= worst.b {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        let left = gk21(f, worst.a, mid);
        let right = gk21(f, mid, worst.b);
        heap.push(left);
        heap.push(right);
        splits += 1;
    }
}

/// `∫_a^b f(t) dt` for finite `a ≤ b`.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    spec.validate()?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("finite interval expected, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    if b < a {
        let r = integrate_finite(f, b, a, spec)?;
        return Ok(Integral { value: -r.value, error: r.error });
    }
    adaptive(&f, &[a, b], spec)
}

const PROBE_WIDTH: f64 = 4.0;
const V_MIN: f64 = -740.0;
const V_MAX: f64 = 700.0;

/// `∫_lower^∞ f(t) dt`.
///
/// `f` is evaluated only at points strictly greater than `lower`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, lower: f64, spec: &QuadratureSpec) -> Result<Integral> {
    spec.validate()?;
    if !lower.is_finite() {
        return Err(Error::Domain(format!("lower limit must be finite, got {lower}")));
    }
    match spec.tail_transform {
        TailTransform::LogMap => {
            let g = |v: f64| {
                let ev = v.exp();
                let t = lower + ev;
                if t <= lower || ev == 0.0 {
                    0.0
                } else {
                    ev * f(t)
                }
            };
            let breaks = log_map_partition(&g, spec);
            adaptive(&g, &breaks, spec)
        }
        TailTransform::ExpSubstitution => {
            let g = |u: f64| {
                let t = lower - u.ln();
                if t.is_finite() {
                    f(t) / u
                } else {
                    0.0
                }
            };
            adaptive(&g, &[0.0, 1.0], spec)
        }
    }
}

// Grows the `v` range chunk by chunk until two consecutive chunks on each
// side are negligible against the running magnitude.
fn log_map_partition<G: Fn(f64) -> f64>(g: &G, spec: &QuadratureSpec) -> Vec<f64> {
    let core = gk21(g, -PROBE_WIDTH, PROBE_WIDTH);
    let mut magnitude = core.abs_value;
    let negligible = |chunk: f64, magnitude: f64| chunk <= 1e-3 * spec.target(magnitude) || chunk == 0.0 && magnitude > 0.0;

    let mut hi = PROBE_WIDTH;
    let mut quiet = 0;
    while hi < V_MAX {
        let seg = gk21(g, hi, hi + PROBE_WIDTH);
        magnitude += seg.abs_value;
        hi += PROBE_WIDTH;
        if negligible(seg.abs_value, magnitude) {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let mut lo = -PROBE_WIDTH;
    quiet = 0;
    while lo > V_MIN {
        let seg = gk21(g, lo - PROBE_WIDTH, lo);
        magnitude += seg.abs_value;
        lo -= PROBE_WIDTH;
        if negligible(seg.abs_value, magnitude) {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let n = ((hi - lo) / PROBE_WIDTH).round() as usize;
    (0..=n).map(|i| lo + i as f64 * PROBE_WIDTH).collect()
}

/// Iterated integral over the wedge `{0 ≤ s < ∞, s ≤ τ < ∞}`:
/// `∫_0^∞ ds ∫_s^∞ dτ f(s, τ)`, outer in `s`, inner in `τ`.
pub fn integrate_box<F: Fn(f64, f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Integral> {
    integrate_wedge(f, None, spec)
}

/// Like [`integrate_box`], optionally restricting the inner range to
/// `s ≤ τ ≤ s + span` when the integrand vanishes beyond it.
pub fn integrate_wedge<F: Fn(f64, f64) -> f64>(f: F, span: Option<f64>, spec: &QuadratureSpec) -> Result<Integral> {
    spec.validate()?;
    if let Some(w) = span {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter(format!("inner span must be positive, got {w}")));
        }
    }
    let inner_spec = spec.tightened(0.1);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner = |s: f64| -> f64 {
        // the result is discarded once any inner integral has failed
        if failure.borrow().is_some() {
            return 0.0;
        }
        let r = match span {
            Some(w) => integrate_finite(|tau| f(s, tau), s, s + w, &inner_spec),
            None => integrate_semi_infinite(|tau| f(s, tau), s, &inner_spec),
        };
        match r {
            Ok(v) => v.value,
            Err(e) => {
                let mut slot = failure.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                f64::NAN
            }
        }
    };
    let outer = integrate_semi_infinite(inner, 0.0, spec);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    outer
}
