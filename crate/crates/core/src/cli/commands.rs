use std::path::{Path, PathBuf};

use serde::Serialize;

use super::output::{render_record, render_table, Format, Outcome, TimeUnit};
use super::{AnalyzeArgs, Cli, CliError, FilterArgs, FitArgs, ParadoxArgs, PipelineArgs, SimulateArgs, SynthArgs};
use crate::analytics::{self, omega_curve, paradox_sweep, waiting_law, WaitingTimeAnalysis};
use crate::distributions::{DurationDistribution, DurationRegistry, ObservationDistribution, ObservationRegistry};
use crate::error::{Error, Result};
use crate::fit::{empirical_waiting_stats_from_durations, fit_weibull, goodness_of_fit, FitResult, GoodnessOfFit};
use crate::ratefilter::{first_exit_filter, ingest_csv_path, read_durations_path, synth_ticks, write_durations, write_filtered_csv, write_ticks_csv};
use crate::simulate::{ks_distance, summarize, RenewalSample, SamplerRegistry};

type CliResult<T> = std::result::Result<T, CliError>;

/// Default Weibull shape grid of the paradox sweep.
pub const DEFAULT_GRID: &str = "0.3:3.0:0.05";

/// Parses `start:stop:step` (inclusive, values rounded to 1e-12) or a
/// comma-separated list of shapes.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("grid value '{}' is not a number", s.trim())))
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidParameter(format!("grid range must be start:stop:step, got '{spec}'")));
        }
        let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if !(step > 0.0) || !(stop >= start) || !step.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidParameter(format!("grid range '{spec}' needs step > 0 and stop >= start")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        spec.split(',').map(number).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(Error::InvalidParameter("grid is empty".into()));
    }
    if let Some(bad) = values.iter().find(|&&m| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid values must be > 0, found {bad}")));
    }
    Ok(values)
}

fn out_dir(cli: &Cli, command: &str) -> Result<PathBuf> {
    cli.out
        .clone()
        .ok_or_else(|| Error::InvalidParameter(format!("{command} writes several files and needs --out DIR")))
}

fn to_string(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 output")
}

/// Either writes `content` to `--out` or prints it.
fn single_output(cli: &Cli, content: String) -> Outcome {
    match &cli.out {
        Some(path) => Outcome::default().file(path.clone(), content),
        None => Outcome::default().print(content),
    }
}

fn laws(dist: &str, obs: &str) -> Result<(DurationDistribution, ObservationDistribution)> {
    Ok((DurationRegistry::default().build(dist)?, ObservationRegistry::default().build(obs)?))
}

#[derive(Debug, Serialize)]
struct FilterSummary {
    ticks: usize,
    updates: usize,
    epsilon: f64,
    time_unit: TimeUnit,
    mean_tick_spacing: Option<f64>,
    mean_duration: Option<f64>,
}

pub(super) fn filter(cli: &Cli, args: &FilterArgs) -> CliResult<Outcome> {
    let dir = out_dir(cli, "filter")?;
    let ticks = ingest_csv_path(&args.input)?;
    let filtered = first_exit_filter(&ticks, args.epsilon)?;
    let unit = cli.time_unit;
    let summary = FilterSummary {
        ticks: ticks.len(),
        updates: filtered.updates.len(),
        epsilon: args.epsilon,
        time_unit: unit,
        mean_tick_spacing: ticks.mean_spacing().map(|t| unit.time(t)),
        mean_duration: filtered.mean_duration().map(|t| unit.time(t)),
    };
    let format = cli.format.unwrap_or(Format::Json);
    Ok(Outcome::default()
        .file(dir.join("filtered.csv"), to_string(|w| write_filtered_csv(w, &filtered)))
        .file(dir.join("durations.txt"), to_string(|w| write_durations(w, &filtered.durations)))
        .print(render_record(&summary, format, &format!("times in {}", unit.label()))?))
}

#[derive(Debug, Clone, Serialize)]
struct FitReport {
    n: usize,
    m_hat: f64,
    a_hat: f64,
    /// Conventional scale `a^{1/m}` in seconds.
    scale: f64,
    log_likelihood: f64,
    stderr_m: f64,
    stderr_a: f64,
    ks: f64,
    ks_threshold: f64,
    ks_pass: bool,
    low_power: bool,
}

impl FitReport {
    fn new(fit: &FitResult, gof: &GoodnessOfFit) -> Self {
        if gof.low_power {
            log::warn!("only {} durations: the goodness-of-fit test has little power", fit.n);
        }
        Self {
            n: fit.n,
            m_hat: fit.m_hat,
            a_hat: fit.a_hat,
            scale: fit.scale(),
            log_likelihood: fit.log_likelihood,
            stderr_m: fit.stderr.0,
            stderr_a: fit.stderr.1,
            ks: gof.ks,
            ks_threshold: gof.threshold,
            ks_pass: gof.pass,
            low_power: gof.low_power,
        }
    }
}

pub(super) fn fit(cli: &Cli, args: &FitArgs) -> CliResult<Outcome> {
    let taus = read_durations_path(&args.input)?;
    let fit = fit_weibull(&taus)?;
    let gof = goodness_of_fit(&taus, &fit)?;
    let report = FitReport::new(&fit, &gof);
    let format = cli.format.unwrap_or(Format::Json);
    Ok(single_output(cli, render_record(&report, format, "Weibull (m, a) fitted on durations in seconds")?))
}

#[derive(Debug, Serialize)]
struct CurveInfo {
    points: usize,
    s_max_seconds: f64,
    /// Exact Ω mass beyond `s_max`.
    tail_mass: f64,
    trapezoid_mass: f64,
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    dist: String,
    obs: String,
    time_unit: TimeUnit,
    analysis: WaitingTimeAnalysis,
    curve: CurveInfo,
}

pub(super) fn analyze(cli: &Cli, args: &AnalyzeArgs) -> CliResult<Outcome> {
    let (d, o) = laws(&args.dist, &args.obs)?;
    let analysis = analytics::analyze(&d, &o)?;
    let law = waiting_law(&d, &o)?;
    let s_max = args.s_max.unwrap_or(10.0 * analysis.mean_wait);
    let curve = omega_curve(law.as_ref(), s_max, args.points)?;
    let unit = cli.time_unit;
    let report = AnalyzeReport {
        dist: d.describe(),
        obs: o.describe(),
        time_unit: unit,
        analysis: unit.analysis(&analysis),
        curve: CurveInfo {
            points: curve.s.len(),
            s_max_seconds: s_max,
            tail_mass: curve.tail_mass,
            trapezoid_mass: curve.trapezoid_mass(),
        },
    };
    let mut csv = format!(
        "# waiting-time density for {} under {} observation\n# s in seconds, omega in 1/seconds; mass beyond s = {} is {}\ns,omega\n",
        d.describe(),
        o.describe(),
        s_max,
        curve.tail_mass
    );
    for (s, w) in curve.s.iter().zip(&curve.omega) {
        csv.push_str(&format!("{s},{w}\n"));
    }
    let format = cli.format.unwrap_or(Format::Json);
    let comment = format!("times in {}", unit.label());
    let rendered = render_record(&report, format, &comment)?;
    let mut outcome = Outcome::default().print(rendered.clone());
    if let Some(dir) = &cli.out {
        outcome = outcome
            .file(dir.join(format!("analysis.{}", format.extension())), rendered)
            .file(dir.join("omega.csv"), csv);
    }
    Ok(outcome)
}

#[derive(Debug, Serialize)]
struct MonteCarloStats {
    count: usize,
    mean_wait: f64,
    std: Option<f64>,
    second_moment: f64,
    se_mean: Option<f64>,
    se_std: Option<f64>,
    mean_duration: f64,
    plug_in_mean_wait: f64,
    plug_in_std: Option<f64>,
    acceptance_rate: Option<f64>,
}

fn monte_carlo_stats(r: &RenewalSample, unit: TimeUnit) -> Result<MonteCarloStats> {
    let waits = r.waits();
    let (mean, second, std, se_mean, se_std) = if waits.len() >= 2 {
        let s = summarize(waits)?;
        (s.mean, s.second_moment, Some(s.std), Some(s.se_mean), Some(s.se_std))
    } else {
        (waits[0], waits[0] * waits[0], None, None, None)
    };
    let u = unit.seconds();
    Ok(MonteCarloStats {
        count: r.len(),
        mean_wait: mean / u,
        std: std.map(|x| x / u),
        second_moment: second / (u * u),
        se_mean: se_mean.map(|x| x / u),
        se_std: se_std.map(|x| x / u),
        mean_duration: r.duration_moments.moment(1) / u,
        plug_in_mean_wait: r.plug_in_mean_wait() / u,
        plug_in_std: r.plug_in_std().ok().map(|x| x / u),
        acceptance_rate: r.acceptance_rate,
    })
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    dist: String,
    obs: String,
    scheme: String,
    seed: u64,
    time_unit: TimeUnit,
    monte_carlo: MonteCarloStats,
    analytic: Option<WaitingTimeAnalysis>,
    /// Against the analytic waiting-time CDF.
    ks_distance: Option<f64>,
}

fn ks_against(d: &DurationDistribution, o: &ObservationDistribution, waits: &[f64]) -> Result<f64> {
    let law = waiting_law(d, o)?;
    ks_distance(waits, |s| law.cdf(s).unwrap_or(f64::NAN))
}

pub(super) fn simulate(cli: &Cli, args: &SimulateArgs) -> CliResult<Outcome> {
    let dir = out_dir(cli, "simulate")?;
    let (d, o) = laws(&args.dist, &args.obs)?;
    let registry = SamplerRegistry::default();
    let sampler = match &args.scheme {
        Some(name) => registry.get(name)?,
        None => registry.default_for(&o)?,
    };
    let sample = sampler.sample(&d, &o, args.count, args.seed)?;
    let analytic = match analytics::analyze(&d, &o) {
        Ok(a) => Some(a),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let ks = match (&analytic, sample.len() >= 2) {
        (Some(_), true) => Some(ks_against(&d, &o, sample.waits())?),
        _ => None,
    };
    let unit = cli.time_unit;
    let report = SimulateReport {
        dist: d.describe(),
        obs: o.describe(),
        scheme: sampler.name().to_string(),
        seed: args.seed,
        time_unit: unit,
        monte_carlo: monte_carlo_stats(&sample, unit)?,
        analytic: analytic.as_ref().map(|a| unit.analysis(a)),
        ks_distance: ks,
    };
    let mut csv = format!(
        "# {} draws, scheme {}, seed {}; tau, t, s in seconds\ntau,t,s\n",
        sample.len(),
        sampler.name(),
        args.seed
    );
    for ((tau, t), s) in sample.durations().iter().zip(sample.offsets()).zip(sample.waits()) {
        csv.push_str(&format!("{tau},{t},{s}\n"));
    }
    let format = cli.format.unwrap_or(Format::Json);
    let rendered = render_record(&report, format, &format!("times in {}", unit.label()))?;
    Ok(Outcome::default()
        .file(dir.join("samples.csv"), csv)
        .file(dir.join(format!("stats.{}", format.extension())), rendered.clone())
        .print(rendered))
}

#[derive(Debug, Serialize)]
struct SweepOut {
    m: f64,
    mean_duration: f64,
    mean_wait: f64,
    paradox: bool,
}

pub(super) fn paradox(cli: &Cli, args: &ParadoxArgs) -> CliResult<Outcome> {
    let grid = parse_grid(&args.grid)?;
    if !(args.a > 0.0) || !args.a.is_finite() {
        return Err(Error::InvalidParameter(format!("a must be finite and > 0, got {}", args.a)).into());
    }
    let unit = cli.time_unit;
    let rows: Vec<SweepOut> = paradox_sweep(args.a, &grid)?
        .into_iter()
        .map(|r| SweepOut {
            m: r.m,
            mean_duration: unit.time(r.mean_duration),
            mean_wait: unit.time(r.mean_wait),
            paradox: r.paradox,
        })
        .collect();
    let format = cli.format.unwrap_or(Format::Csv);
    let comment = format!("Weibull a = {}; mean_duration and mean_wait in {}", args.a, unit.label());
    Ok(single_output(cli, render_table(&rows, format, &comment)?))
}

#[derive(Debug, Serialize)]
struct Estimate {
    mean_wait: f64,
    std: f64,
}

#[derive(Debug, Serialize)]
struct MonteCarloEstimate {
    count: usize,
    seed: u64,
    mean_wait: f64,
    std: f64,
    ks_distance: f64,
}

#[derive(Debug, Serialize)]
struct PipelineReport {
    input: String,
    ticks: usize,
    updates: usize,
    durations: usize,
    epsilon: f64,
    time_unit: TimeUnit,
    fit: FitReport,
    /// Uniform-observation closed forms on the fitted Weibull law.
    analytic: Estimate,
    /// Length-biased draws from the fitted law.
    monte_carlo: MonteCarloEstimate,
    /// Sample moments of the observed durations.
    empirical: Estimate,
    /// Largest pairwise relative difference between the three mean waits.
    mean_wait_spread: f64,
    std_spread: f64,
}

fn stage<T>(name: &'static str, r: Result<T>) -> CliResult<T> {
    r.map_err(|error| CliError {
        stage: Some(name),
        error,
    })
}

fn spread(values: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
    }
    worst
}

pub(super) fn pipeline(cli: &Cli, args: &PipelineArgs) -> CliResult<Outcome> {
    let ticks = stage("ingest", ingest_csv_path(&args.input))?;
    let filtered = stage("filter", first_exit_filter(&ticks, args.epsilon))?;
    let taus = &filtered.durations;
    let (fit, gof) = stage(
        "fit",
        fit_weibull(taus).and_then(|f| Ok((f, goodness_of_fit(taus, &f)?))),
    )?;
    let fitted = stage("fit", fit.distribution())?;
    let analytic = stage("analytic", analytics::analyze_uniform(&fitted))?;
    let (mc, ks) = stage(
        "monte-carlo",
        crate::simulate::sample_waiting_uniform(&fitted, args.count, args.seed).and_then(|r| {
            let s = summarize(r.waits())?;
            let ks = ks_against(&fitted, &ObservationDistribution::uniform_improper(), r.waits())?;
            Ok((s, ks))
        }),
    )?;
    let empirical = stage("empirical", empirical_waiting_stats_from_durations(taus))?;
    let unit = cli.time_unit;
    let report = PipelineReport {
        input: display_path(&args.input),
        ticks: ticks.len(),
        updates: filtered.updates.len(),
        durations: taus.len(),
        epsilon: args.epsilon,
        time_unit: unit,
        fit: FitReport::new(&fit, &gof),
        analytic: Estimate {
            mean_wait: unit.time(analytic.mean_wait),
            std: unit.time(analytic.std),
        },
        monte_carlo: MonteCarloEstimate {
            count: mc.count,
            seed: args.seed,
            mean_wait: unit.time(mc.mean),
            std: unit.time(mc.std),
            ks_distance: ks,
        },
        empirical: Estimate {
            mean_wait: unit.time(empirical.mean_wait),
            std: unit.time(empirical.std),
        },
        mean_wait_spread: spread(&[analytic.mean_wait, mc.mean, empirical.mean_wait]),
        std_spread: spread(&[analytic.std, mc.std, empirical.std]),
    };
    let format = cli.format.unwrap_or(Format::Json);
    Ok(single_output(cli, render_record(&report, format, &format!("times in {}", unit.label()))?))
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}

pub(super) fn synth(cli: &Cli, args: &SynthArgs) -> CliResult<Outcome> {
    let ticks = synth_ticks(args.step_std, args.tick_interval, args.count, args.seed, args.start_price)?;
    let content = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => to_string(|w| write_ticks_csv(w, &ticks)),
        Format::Json => render_table(ticks.ticks(), Format::Json, "")?,
    };
    Ok(single_output(cli, content))
}
