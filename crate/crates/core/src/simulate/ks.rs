use rayon::prelude::*;

use crate::error::{Error, Result};

/// Slack allowed when checking a reference CDF for monotonicity and range.
const CDF_SLACK: f64 = 1e-12;

/// Kolmogorov-Smirnov distance `sup |F̂(x) - F(x)|` between the empirical CDF
/// of `samples` and `cdf`.
///
/// At each distinct sample value `x` the empirical CDF is compared against
/// both `F(x)` and the left limit, taken as `F` at the next float below `x`,
/// so step CDFs are handled exactly.
pub fn ks_distance<F>(samples: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            got: samples.len(),
            need: 2,
        });
    }
    if let Some(bad) = samples.iter().find(|x| x.is_nan()) {
        return Err(Error::InvalidParameter(format!("sample value {bad} is not a number")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);

    // (value, first index, one past last index)
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        groups.push((sorted[i], i, j));
        i = j;
    }
    let values: Vec<(f64, f64)> = groups.par_iter().map(|&(x, _, _)| (cdf(x.next_down()), cdf(x))).collect();

    let n = sorted.len() as f64;
    let mut previous = f64::NEG_INFINITY;
    let mut distance = 0.0f64;
    for (&(x, lo, hi), &(left, at)) in groups.iter().zip(&values) {
        if !(left >= -CDF_SLACK && at <= 1.0 + CDF_SLACK) {
            return Err(Error::Numeric(format!("reference CDF outside [0, 1] near {x}: {left}, {at}")));
        }
        if left < previous - CDF_SLACK || at < left - CDF_SLACK {
            return Err(Error::Numeric(format!("reference CDF is not monotone near {x}")));
        }
        previous = at;
        distance = distance.max((left - lo as f64 / n).abs()).max((hi as f64 / n - at).abs());
    }
    Ok(distance.min(1.0))
}
