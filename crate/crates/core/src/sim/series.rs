//! Time-series helpers: interval filtering and instantaneous rate.

use super::SimError;

/// Adjacent-pair instantaneous rate of a counter.
///
/// For each consecutive pair the rate is `(v1 - v0) / (t1 - t0)`; a decrease
/// is a counter reset and yields `v1 / (t1 - t0)`. The point is stamped with
/// the later timestamp. Fewer than two samples give an empty result.
pub fn irate_points(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, SimError> {
    if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
        return Err(SimError::NonMonotonicTimestamps { index: i + 1 });
    }
    Ok(samples
        .windows(2)
        .map(|w| {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            let dt = t1 - t0;
            let delta = if v1 >= v0 { v1 - v0 } else { v1 };
            (t1, delta / dt)
        })
        .collect())
}

/// Samples with `start <= t <= end`, order preserved.
pub fn filter_range(samples: &[(f64, f64)], start: f64, end: f64) -> Vec<(f64, f64)> {
    samples
        .iter()
        .copied()
        .filter(|(t, _)| *t >= start && *t <= end)
        .collect()
}
