use proptest::prelude::*;

use renewal::analytics::{analyze, waiting_law};
use renewal::distributions::{DurationDistribution, ObservationDistribution};
use renewal::fit::{fit_weibull, sample_raw_moment};
use renewal::ratefilter::{first_exit_filter, TickSeries};
use renewal::simulate::{sample_waiting_general, sample_waiting_uniform};

/// Composite Simpson on `s = x·u^3`, `u ∈ [0, 1]`.
fn simpson(f: impl Fn(f64) -> f64, x: f64, intervals: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    let g = |u: f64| f(x * u * u * u) * 3.0 * x * u * u;
    let mut acc = g(0.0) + g(1.0);
    for i in 1..intervals {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    acc * h / 3.0
}

fn observation(kind: u8, param: f64) -> ObservationDistribution {
    match kind {
        0 => ObservationDistribution::uniform_improper(),
        1 => ObservationDistribution::truncated_exponential(param).unwrap(),
        _ => ObservationDistribution::power_window(param, 3.0).unwrap(),
    }
}

fn reference_scan(prices: &[i64], band: i64) -> Vec<usize> {
    let mut picked = vec![0];
    for j in 1..prices.len() {
        if (prices[j] - prices[*picked.last().unwrap()]).abs() >= band {
            picked.push(j);
        }
    }
    picked
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_matches_integer_scan(steps in prop::collection::vec(-9i64..=9, 1..80), band in 1i64..20) {
        let mut cents = vec![5000i64];
        for s in &steps {
            cents.push(cents[cents.len() - 1] + s);
        }
        let pairs: Vec<(f64, f64)> = cents.iter().enumerate().map(|(i, &c)| (i as f64, c as f64 / 100.0)).collect();
        let ticks = TickSeries::from_pairs(&pairs).unwrap();
        let filtered = first_exit_filter(&ticks, band as f64 / 100.0).unwrap();
        let got: Vec<usize> = filtered.updates.iter().map(|t| t.timestamp as usize).collect();
        prop_assert_eq!(got, reference_scan(&cents, band));
        let again = first_exit_filter(&filtered.as_ticks(), band as f64 / 100.0).unwrap();
        prop_assert_eq!(again.updates, filtered.updates.clone());
        prop_assert_eq!(filtered.durations.len() + 1, filtered.updates.len());
        prop_assert!(filtered.durations.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn raw_moments_permutation_and_scale(xs in prop::collection::vec(0.01f64..100.0, 2..200), c in 0.1f64..10.0, n in 1u32..=3) {
        let base = sample_raw_moment(&xs, n).unwrap();
        let mut rev = xs.clone();
        rev.reverse();
        let reversed = sample_raw_moment(&rev, n).unwrap();
        prop_assert!((base - reversed).abs() <= 1e-12 * base);
        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let s = sample_raw_moment(&scaled, n).unwrap();
        prop_assert!((s - c.powi(n as i32) * base).abs() <= 1e-12 * s);
    }

    #[test]
    fn uniform_samples_are_valid(m in 0.4f64..3.0, a in 0.2f64..5.0, count in 1usize..300, seed in any::<u64>()) {
        let d = DurationDistribution::weibull(m, a).unwrap();
        let r = sample_waiting_uniform(&d, count, seed).unwrap();
        prop_assert_eq!(r.len(), count);
        for ((&tau, &t), &s) in r.durations().iter().zip(r.offsets()).zip(r.waits()) {
            prop_assert!(tau > 0.0 && t >= 0.0 && t <= tau);
            prop_assert_eq!(s, tau - t);
        }
        prop_assert_eq!(sample_waiting_uniform(&d, count, seed).unwrap(), r);
    }

    #[test]
    fn paradox_iff_shape_below_one(m in 0.3f64..3.0, a in 0.1f64..100.0) {
        prop_assume!((m - 1.0).abs() > 1e-6);
        let d = DurationDistribution::weibull(m, a).unwrap();
        let r = analyze(&d, &ObservationDistribution::uniform_improper()).unwrap();
        prop_assert_eq!(r.paradox, m < 1.0);
        prop_assert_eq!(r.mean_wait > r.mean_duration, m < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn omega_normalized_and_consistent(m in 0.7f64..3.0, a in 0.5f64..2.0, kind in 0u8..3, param in 0.3f64..2.0) {
        let d = DurationDistribution::weibull(m, a).unwrap();
        let o = observation(kind, param);
        let law = waiting_law(&d, &o).unwrap();
        let analysis = analyze(&d, &o).unwrap();
        let x = 200.0 * analysis.mean_wait;

        let body = simpson(|s| law.pdf(s).unwrap(), x, 2000);
        let mass = body + law.survival(x).unwrap();
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);

        let mean = simpson(|s| law.survival(s).unwrap(), x, 2000);
        prop_assert!((mean - analysis.mean_wait).abs() <= 1e-7 * analysis.mean_wait,
            "integrated survival {} vs mean wait {}", mean, analysis.mean_wait);
    }

    #[test]
    fn general_samples_are_valid(m in 0.6f64..2.5, kind in 1u8..3, param in 0.3f64..2.0, seed in any::<u64>()) {
        let d = DurationDistribution::weibull(m, 1.0).unwrap();
        let o = observation(kind, param);
        let r = sample_waiting_general(&d, &o, 500, seed).unwrap();
        prop_assert_eq!(r.len(), 500);
        prop_assert!(r.offsets().iter().zip(r.durations()).all(|(&t, &tau)| t >= 0.0 && t <= tau));
        let rate = r.acceptance_rate.unwrap();
        prop_assert!(rate > 0.0 && rate <= 1.0);
    }

    #[test]
    fn fit_round_trip(m in 0.5f64..2.5, a in 0.3f64..4.0, seed in any::<u64>()) {
        let taus = DurationDistribution::weibull(m, a).unwrap().sample(20_000, seed).unwrap();
        let f = fit_weibull(&taus).unwrap();
        prop_assert!((f.m_hat - m).abs() <= 5.0 * f.stderr.0, "m {} vs {}", f.m_hat, m);
        prop_assert!((f.a_hat - a).abs() <= 5.0 * f.stderr.1, "a {} vs {}", f.a_hat, a);
    }
}

#[test]
fn tail_cutoff_is_negligible() {
    let d = DurationDistribution::weibull(0.7, 2.0).unwrap();
    let law = waiting_law(&d, &ObservationDistribution::uniform_improper()).unwrap();
    let w = analyze(&d, &ObservationDistribution::uniform_improper()).unwrap().mean_wait;
    assert!(law.survival(200.0 * w).unwrap() * 200.0 * w < 1e-10);
}
