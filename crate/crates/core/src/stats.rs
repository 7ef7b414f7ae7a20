//! Sample statistics used by the Monte-Carlo harness: autocorrelation,
//! exponential decay-time fits and π-periodic (axial) angle statistics.

use std::f64::consts::PI;

use crate::scalar::{wrap_to_period, wrapped_difference};

/// Normalized sample autocorrelation for lags `0..=max_lag` (mean removed,
/// biased `1/n` normalization so the sequence is positive semidefinite).
pub fn autocorrelation(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let n = xs.len();
    if n == 0 {
        return vec![f64::NAN; max_lag + 1];
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum();
    (0..=max_lag)
        .map(|lag| {
            if lag >= n || c0 == 0.0 {
                return if lag == 0 { 1.0 } else { 0.0 };
            }
            centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c0
        })
        .collect()
}

/// Element-wise mean of several autocorrelation sequences.
pub fn mean_autocorrelation<S: AsRef<[f64]>>(series: &[S], max_lag: usize) -> Vec<f64> {
    let mut acc = vec![0.0; max_lag + 1];
    for s in series {
        for (a, r) in acc.iter_mut().zip(autocorrelation(s.as_ref(), max_lag)) {
            *a += r;
        }
    }
    acc.into_iter().map(|a| a / series.len() as f64).collect()
}

/// Fits `ln r(k) = a − k·dt/τ` by least squares over lags `1..` while
/// `r(k) > floor`, and returns `τ`.
///
/// Lag 0 is excluded because independent measurement noise inflates only the
/// zero-lag term; the free intercept absorbs the resulting scale factor.
pub fn decay_time(acf: &[f64], dt: f64, floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = acf
        .iter()
        .enumerate()
        .skip(1)
        .take_while(|(_, &r)| r > floor)
        .map(|(k, &r)| (k as f64 * dt, r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

/// Removes jumps larger than half a period from a wrapped angle series.
pub fn unwrap_angles(xs: &[f64], period: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut prev: Option<f64> = None;
    for &x in xs {
        let next = match prev {
            None => x,
            Some(p) => p + wrapped_difference(x, p, period),
        };
        out.push(next);
        prev = Some(next);
    }
    out
}

/// Mean axis of π-periodic angles: half the argument of the mean of `e^{2iφ}`.
pub fn axial_mean(angles: &[f64]) -> f64 {
    let (c, s) = angles
        .iter()
        .fold((0.0, 0.0), |(c, s), a| (c + (2.0 * a).cos(), s + (2.0 * a).sin()));
    wrap_to_period(s.atan2(c) / 2.0, PI)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acf_of_geometric_sequence_decay() {
        // deterministic AR(1)-like exact exponential: fit must return τ exactly
        let acf: Vec<f64> = (0..20).map(|k| 0.8 * (-(k as f64) * 0.5 / 5.0).exp()).collect();
        let tau = decay_time(&acf, 0.5, 0.05).unwrap();
        assert!((tau - 5.0).abs() < 1e-12);
    }

    #[test]
    fn acf_lag_zero_is_one() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64).collect();
        let r = autocorrelation(&xs, 5);
        assert!((r[0] - 1.0).abs() < 1e-15);
        assert!(r.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn unwrap_follows_continuous_path() {
        let path: Vec<f64> = (0..40).map(|i| 0.1 * i as f64).collect();
        let wrapped: Vec<f64> = path.iter().map(|&x| wrap_to_period(x, PI)).collect();
        let un = unwrap_angles(&wrapped, PI);
        for (a, b) in un.iter().zip(&path) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn axial_mean_across_wraparound() {
        let m = axial_mean(&[PI - 0.05, 0.05, PI - 0.02, 0.02]);
        assert!(m < 1e-12 || (PI - m) < 1e-12, "{m}");
        assert!((axial_mean(&[0.4, 0.6]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn variance_unbiased() {
        assert!((variance(&[1.0, 2.0, 3.0, 4.0]) - 5.0 / 3.0).abs() < 1e-15);
    }
}
