//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use renewal::analytics::{
    analyze, delta_n, mean_wait_from_moments, paradox_sweep, std_wait_from_moments, waiting_law,
    waiting_moments_general, weibull_mean_wait, weibull_std_wait,
};
use renewal::cli::{parse_grid, DEFAULT_GRID};
use renewal::distributions::{DurationDistribution, ObservationDistribution};
use renewal::fit::{empirical_waiting_stats_from_durations, fit_weibull};
use renewal::ratefilter::{first_exit_filter, synth_ticks, TickSeries};
use renewal::simulate::{ks_distance, stream_rng, summarize, SamplerRegistry};

const EXPONENTIAL_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-10;
const QUADRATURE_TOL: f64 = 1e-7;
const CROSSOVER_TOL: f64 = 1e-10;
const DELTA_BOUND: f64 = 1e-3;
const KS_BOUND: f64 = 0.01;
const MC_SIGMAS: f64 = 3.0;
const CLOSURE_TOL: f64 = 0.03;
const FIT_SIGMAS: f64 = 3.0;
const CURVE_MASS_TOL: f64 = 1e-6;
const CURVE_POINTS: usize = 4000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn exponential_identity() -> Outcome {
    let mut worst = 0.0f64;
    for a in [0.5, 1.0, 20.0 * 60.0] {
        let d = DurationDistribution::weibull(1.0, a).map_err(|e| e.to_string())?;
        let r = analyze(&d, &ObservationDistribution::uniform_improper()).map_err(|e| e.to_string())?;
        for (name, v) in [("w", r.mean_wait), ("sigma", r.std)] {
            let err = rel(v, a);
            worst = worst.max(err);
            check(err <= EXPONENTIAL_TOL, || format!("a={a}: {name}={v}, rel err {err:e}"))?;
        }
    }
    Ok(format!("max rel err {worst:.1e} <= {EXPONENTIAL_TOL:e}"))
}

fn closed_form_vs_moments() -> Outcome {
    let uniform = ObservationDistribution::uniform_improper();
    let (mut worst_ratio, mut worst_quad) = (0.0f64, 0.0f64);
    for m in [0.5, 0.585, 0.59, 1.0, 2.0] {
        for a in [0.5, 1.0, 4.0] {
            let d = DurationDistribution::weibull(m, a).map_err(|e| e.to_string())?;
            let e = |n| d.raw_moment(n).map_err(|e| e.to_string());
            let (e1, e2, e3) = (e(1)?, e(2)?, e(3)?);
            let w = weibull_mean_wait(m, a);
            let sigma = weibull_std_wait(m, a);
            let ratio_w = mean_wait_from_moments(e1, e2);
            let ratio_s = std_wait_from_moments(e1, e2, e3).map_err(|e| e.to_string())?;
            let err = rel(w, ratio_w).max(rel(sigma, ratio_s));
            worst_ratio = worst_ratio.max(err);
            check(err <= CLOSED_FORM_TOL, || format!("m={m} a={a}: closed vs ratio rel err {err:e}"))?;
            let q = waiting_moments_general(&d, &uniform).map_err(|e| e.to_string())?;
            let err = rel(w, q.mean_wait).max(rel(sigma, q.std));
            worst_quad = worst_quad.max(err);
            check(err <= QUADRATURE_TOL, || format!("m={m} a={a}: closed vs quadrature rel err {err:e}"))?;
        }
    }
    Ok(format!(
        "15 (m, a) pairs: closed vs moment ratio {worst_ratio:.1e} <= {CLOSED_FORM_TOL:e}, vs quadrature {worst_quad:.1e} <= {QUADRATURE_TOL:e}"
    ))
}

fn paradox_crossover() -> Outcome {
    let grid = parse_grid(DEFAULT_GRID).map_err(|e| e.to_string())?;
    let rows = paradox_sweep(1.0, &grid).map_err(|e| e.to_string())?;
    let mut sign_changes = 0;
    let mut last_sign = 0i8;
    for r in &rows {
        let gap = r.mean_wait - r.mean_duration;
        let sign = if r.m < 1.0 {
            check(gap > 0.0 && r.paradox, || format!("m={}: w={} E={}", r.m, r.mean_wait, r.mean_duration))?;
            1
        } else if r.m == 1.0 {
            check(rel(r.mean_wait, r.mean_duration) <= CROSSOVER_TOL && !r.paradox, || {
                format!("m=1: w={} E={}", r.mean_wait, r.mean_duration)
            })?;
            0
        } else {
            check(gap < 0.0 && !r.paradox, || format!("m={}: w={} E={}", r.m, r.mean_wait, r.mean_duration))?;
            -1
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                sign_changes += 1;
            }
            last_sign = sign;
        }
    }
    check(sign_changes == 1, || format!("{sign_changes} sign changes"))?;
    let half = paradox_sweep(1.0, &[0.5]).map_err(|e| e.to_string())?[0];
    let ratio = half.mean_wait / half.mean_duration;
    check((ratio - 3.0).abs() <= 3.0 * CROSSOVER_TOL, || format!("w/E at m=0.5 is {ratio}"))?;
    Ok(format!("{} shapes in [0.3, 3], one sign change at m=1, w/E(0.5) = {ratio}", rows.len()))
}

fn delta_vanishing() -> Outcome {
    let mut worst = 0.0f64;
    for d in [
        DurationDistribution::weibull(0.585, 1.0),
        DurationDistribution::weibull(2.0, 1.0),
        DurationDistribution::gamma(2.0, 0.5),
    ] {
        let d = d.map_err(|e| e.to_string())?;
        let e1 = d.mean().map_err(|e| e.to_string())?;
        let window = ObservationDistribution::power_window(0.0, 1e3 * e1).map_err(|e| e.to_string())?;
        let uniform = ObservationDistribution::uniform_improper();
        for n in 1..=3u32 {
            let v = delta_n(&d, &window, n).map_err(|e| e.to_string())?;
            let scaled = v.abs() / e1.powi(n as i32);
            worst = worst.max(scaled);
            check(scaled < DELTA_BOUND, || format!("{} n={n}: delta={v:e}", d.describe()))?;
            let exact = delta_n(&d, &uniform, n).map_err(|e| e.to_string())?;
            check(exact == 0.0, || format!("{} n={n}: uniform delta {exact:e} is not exactly 0", d.describe()))?;
        }
    }
    Ok(format!("wide window max |delta_n|/E^n = {worst:.1e} < {DELTA_BOUND:e}; uniform exactly 0"))
}

fn oracle_matrix() -> Outcome {
    let registry = SamplerRegistry::default();
    let w = |m, a| DurationDistribution::weibull(m, a).unwrap();
    let cases: Vec<(DurationDistribution, ObservationDistribution, &str)> = vec![
        (w(0.585, 1.0), ObservationDistribution::uniform_improper(), "length-biased"),
        (w(0.585, 1.0), ObservationDistribution::uniform_improper(), "timeline"),
        (w(2.0, 1.0), ObservationDistribution::uniform_improper(), "length-biased"),
        (DurationDistribution::gamma(2.0, 1.0).unwrap(), ObservationDistribution::uniform_improper(), "timeline"),
        (w(0.585, 1.0), ObservationDistribution::truncated_exponential(1.0).unwrap(), "rejection"),
        (DurationDistribution::exponential(1.0).unwrap(), ObservationDistribution::power_window(0.0, 2.0).unwrap(), "rejection"),
        (w(1.5, 2.0), ObservationDistribution::power_window(1.0, 3.0).unwrap(), "rejection"),
        (DurationDistribution::gamma(0.7, 1.5).unwrap(), ObservationDistribution::truncated_exponential(0.5).unwrap(), "rejection"),
    ];
    let mut worst_ks = 0.0f64;
    let mut worst_z = 0.0f64;
    for (i, (d, o, scheme)) in cases.iter().enumerate() {
        let label = format!("{} / {} / {scheme}", d.describe(), o.describe());
        let analysis = analyze(d, o).map_err(|e| format!("{label}: {e}"))?;
        let law = waiting_law(d, o).map_err(|e| format!("{label}: {e}"))?;
        let sample = registry
            .get(scheme)
            .and_then(|s| s.sample(d, o, 100_000, 1000 + i as u64))
            .map_err(|e| format!("{label}: {e}"))?;
        let ks = ks_distance(sample.waits(), |s| law.cdf(s).unwrap_or(f64::NAN)).map_err(|e| format!("{label}: {e}"))?;
        worst_ks = worst_ks.max(ks);
        check(ks < KS_BOUND, || format!("{label}: KS {ks}"))?;
        let s = summarize(sample.waits()).map_err(|e| e.to_string())?;
        let z_mean = (s.mean - analysis.mean_wait).abs() / s.se_mean;
        let z_std = (s.std - analysis.std).abs() / s.se_std;
        worst_z = worst_z.max(z_mean).max(z_std);
        check(z_mean <= MC_SIGMAS && z_std <= MC_SIGMAS, || {
            format!("{label}: mean {} vs {} ({z_mean:.2} se), std {} vs {} ({z_std:.2} se)", s.mean, analysis.mean_wait, s.std, analysis.std)
        })?;
    }
    Ok(format!(
        "{} (duration, observation) pairs at n=1e5: max KS {worst_ks:.4} < {KS_BOUND}, max |z| {worst_z:.2} <= {MC_SIGMAS}",
        cases.len()
    ))
}

/// Update indices by an integer-price scan: prices are whole cents.
fn reference_scan(cents: &[i64], band: i64) -> Vec<usize> {
    let mut picked = vec![0];
    let mut from = 0;
    while let Some(j) = (from + 1..cents.len()).find(|&j| (cents[j] - cents[picked[picked.len() - 1]]).abs() >= band) {
        picked.push(j);
        from = j;
    }
    picked
}

fn filter_correctness() -> Outcome {
    let mut rng = stream_rng(2024, 0);
    for case in 0..100 {
        let n = rng.random_range(1..=50);
        let mut cents = vec![10_000i64];
        for _ in 1..n {
            let last = cents[cents.len() - 1];
            cents.push((last + rng.random_range(-7..=7)).max(1));
        }
        let ticks = TickSeries::from_pairs(&cents.iter().enumerate().map(|(i, &c)| (i as f64, c as f64 / 100.0)).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        let got: Vec<usize> = first_exit_filter(&ticks, 0.1)
            .map_err(|e| e.to_string())?
            .updates
            .iter()
            .map(|u| u.timestamp as usize)
            .collect();
        let expected = reference_scan(&cents, 10);
        check(got == expected, || format!("series {case}: filter {got:?} vs reference {expected:?}"))?;
    }
    let edge = TickSeries::from_pairs(&[(0.0, 100.00), (1.0, 100.10)]).map_err(|e| e.to_string())?;
    let fired = first_exit_filter(&edge, 0.1).map_err(|e| e.to_string())?.updates.len();
    check(fired == 2, || format!("inclusive boundary produced {fired} updates"))?;

    let walk = synth_ticks(0.03, 1.0, 100_000, 6, 100.0).map_err(|e| e.to_string())?;
    let filtered = first_exit_filter(&walk, 0.1).map_err(|e| e.to_string())?;
    let again = first_exit_filter(&filtered.as_ticks(), 0.1).map_err(|e| e.to_string())?;
    check(again.updates == filtered.updates, || "re-filtering changed the updates".into())?;
    let spacing = walk.mean_spacing().unwrap();
    let mean = filtered.mean_duration().ok_or("no durations")?;
    check(mean >= spacing, || format!("mean duration {mean} < tick spacing {spacing}"))?;
    Ok(format!(
        "100 random series match the reference scan; boundary fires; idempotent; mean duration {mean:.2} >= spacing {spacing}"
    ))
}

fn pipeline_closure() -> Outcome {
    let (m, a) = (0.585, 1.0);
    let d = DurationDistribution::weibull(m, a).map_err(|e| e.to_string())?;
    let taus = d.sample(1_000_000, 77).map_err(|e| e.to_string())?;
    let closed = weibull_std_wait(m, a);
    let sampled = empirical_waiting_stats_from_durations(&taus).map_err(|e| e.to_string())?.std;
    let r = renewal::simulate::sample_waiting_uniform(&d, 1_000_000, 78).map_err(|e| e.to_string())?;
    let mc = summarize(r.waits()).map_err(|e| e.to_string())?.std;
    let spread = [rel(sampled, closed), rel(mc, closed), rel(mc, sampled)].into_iter().fold(0.0, f64::max);
    check(spread <= CLOSURE_TOL, || format!("closed {closed}, sample moments {sampled}, Monte Carlo {mc}"))?;
    Ok(format!("sigma closed {closed:.4}, sample moments {sampled:.4}, Monte Carlo {mc:.4}; spread {spread:.4} <= {CLOSURE_TOL}"))
}

fn fit_recovery() -> Outcome {
    let mut worst = 0.0f64;
    let mut seed = 500;
    for m in [0.585, 1.0, 2.0] {
        for a in [0.5, 1.0, 4.0] {
            seed += 1;
            let taus = DurationDistribution::weibull(m, a)
                .and_then(|d| d.sample(100_000, seed))
                .map_err(|e| e.to_string())?;
            let f = fit_weibull(&taus).map_err(|e| e.to_string())?;
            let zm = (f.m_hat - m).abs() / f.stderr.0;
            let za = (f.a_hat - a).abs() / f.stderr.1;
            worst = worst.max(zm).max(za);
            check(zm <= FIT_SIGMAS && za <= FIT_SIGMAS, || {
                format!("m={m} a={a}: m_hat {} ({zm:.2} se), a_hat {} ({za:.2} se)", f.m_hat, f.a_hat)
            })?;
        }
    }
    Ok(format!("9 (m, a) pairs at n=1e5: max |z| {worst:.2} <= {FIT_SIGMAS}"))
}

struct Curve {
    s: Vec<f64>,
    omega: Vec<f64>,
    tail: f64,
}

impl Curve {
    fn mass(&self) -> f64 {
        let body: f64 = self.s.windows(2).zip(self.omega.windows(2)).map(|(s, o)| 0.5 * (s[1] - s[0]) * (o[0] + o[1])).sum();
        body + self.tail
    }

    fn at(&self, x: f64) -> Option<f64> {
        let i = self.s.iter().position(|&s| s >= x)?;
        if self.s[i] == x || i == 0 {
            return Some(self.omega[i]);
        }
        let t = (x - self.s[i - 1]) / (self.s[i] - self.s[i - 1]);
        Some(self.omega[i - 1] + t * (self.omega[i] - self.omega[i - 1]))
    }
}

fn emit_curve(dir: &Path, m: f64, points: usize) -> Result<Curve, String> {
    let out = dir.join(format!("m{m}-{points}"));
    let status = Command::new(env!("CARGO_BIN_EXE_renewal"))
        .args(["analyze", "--dist", &format!("weibull:m={m},a=1"), "--points", &points.to_string(), "--out"])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("analysis.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let tail = report["curve"]["tail_mass"].as_f64().ok_or("tail_mass missing")?;
    let text = std::fs::read_to_string(out.join("omega.csv")).map_err(|e| e.to_string())?;
    let (mut s, mut omega) = (Vec::new(), Vec::new());
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let (a, b) = line.split_once(',').ok_or("bad curve row")?;
        s.push(a.parse::<f64>().map_err(|e| e.to_string())?);
        omega.push(b.parse::<f64>().map_err(|e| e.to_string())?);
    }
    Ok(Curve { s, omega, tail })
}

fn figure_three() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut curves = Vec::new();
    for m in [0.59, 1.0, 2.0] {
        let c = emit_curve(dir.path(), m, CURVE_POINTS)?;
        let err = (c.mass() - 1.0).abs();
        worst = worst.max(err);
        check(err <= CURVE_MASS_TOL, || format!("m={m}: mass error {err:e}"))?;
        curves.push(c);
    }
    for x in [5.0, 10.0] {
        let heavy = curves[0].at(x).ok_or("m=0.59 curve too short")?;
        let light = curves[1].at(x).ok_or("m=1 curve too short")?;
        check(heavy > light, || format!("s={x}: m=0.59 gives {heavy:e}, m=1 gives {light:e}"))?;
    }
    let coarse = emit_curve(dir.path(), 0.59, 200)?;
    Ok(format!(
        "{CURVE_POINTS}-point curves: max |mass - 1| {worst:.1e} <= {CURVE_MASS_TOL:e}; m=0.59 above m=1 at s=5, 10 (default 200-point grid: {:.1e})",
        (coarse.mass() - 1.0).abs()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("exponential identity w = sigma = a", exponential_identity),
        ("Weibull closed forms vs moment ratios and quadrature", closed_form_vs_moments),
        ("inspection paradox crossover at m = 1", paradox_crossover),
        ("delta_n vanishing for uniform observation", delta_vanishing),
        ("Monte Carlo oracle agreement", oracle_matrix),
        ("first-exit filter correctness", filter_correctness),
        ("pipeline closure of sigma three ways", pipeline_closure),
        ("Weibull fit recovery", fit_recovery),
        ("waiting-time curve regeneration", figure_three),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {}: {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
