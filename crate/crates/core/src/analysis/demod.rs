// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Recovery of the populations of levels 1 and 2 from the measured output.
//!
//! With `ξ` frozen in the rotating frame, `y = Tr(P1 U ξ Uᵀ)` has period
//! `π` in `θ` and its mean over a period is `(ξ11 + ξ22)/2`, while the mean
//! of `y (1 − 2 cos 2θ)` is `ξ22`. A trailing moving average over whole
//! `θ` periods recovers both.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `(t, value)` samples.
pub type TimeSeries = Vec<(f64, f64)>;

/// Three `θ` periods.
pub fn default_window(theta_rate: f64) -> f64 {
    3.0 * 2.0 * PI / theta_rate.abs()
}

/// Trailing average `(1/W) ∫_{t−W}^{t} f` of a piecewise-linear series,
/// reported at every sample time with a full window behind it.
pub fn moving_average(series: &[(f64, f64)], window: f64) -> Result<Vec<(f64, f64)>> {
    if series.len() < 2 {
        return Err(Error::EmptySeries);
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(crate::error::invalid("window", format!("{window} must be positive")));
    }
    // also rejects NaN times
    if series
        .windows(2)
        .any(|w| w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater))
    {
        return Err(crate::error::invalid("series", "sample times must increase"));
    }
    let mut cum = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for w in series.windows(2) {
        acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
        cum.push(acc);
    }
    // integral from t0 to s, for s inside [t_j, t_{j+1}]
    let partial = |j: usize, s: f64| {
        let (ta, fa) = series[j];
        if j + 1 == series.len() {
            return cum[j];
        }
        let (tb, fb) = series[j + 1];
        let fs = fa + (fb - fa) * (s - ta) / (tb - ta);
        cum[j] + 0.5 * (s - ta) * (fa + fs)
    };

    let t0 = series[0].0;
    // tolerate rounding when the window spans an exact number of samples
    let slack = 1e-9 * window.max(1.0);
    let mut j = 0;
    let mut out = Vec::new();
    for (k, &(t, _)) in series.iter().enumerate() {
        let s = t - window;
        if s < t0 - slack {
            continue;
        }
        let s = s.max(t0);
        while j + 1 < series.len() && series[j + 1].0 <= s {
            j += 1;
        }
        out.push((t, (cum[k] - partial(j, s)) / window));
    }
    Ok(out)
}

/// Estimates `(ξ11, ξ22)` as time series from samples of `y` and `θ`.
///
/// The window must cover at least one period `2π/θ̇`, with `θ̇` taken from
/// the end points of the `θ` series.
pub fn demodulate_populations(y: &[(f64, f64)], theta: &[(f64, f64)], window: f64) -> Result<(TimeSeries, TimeSeries)> {
    if y.len() < 2 || theta.len() != y.len() {
        return Err(Error::EmptySeries);
    }
    if y.iter().zip(theta).any(|(a, b)| (a.0 - b.0).abs() > 1e-9) {
        return Err(crate::error::invalid("theta", "sample times differ from y"));
    }
    let (ta, tha) = theta[0];
    let (tb, thb) = theta[theta.len() - 1];
    let rate = (thb - tha) / (tb - ta);
    let period = 2.0 * PI / rate.abs();
    if window.partial_cmp(&(period * (1.0 - 1e-9))).is_none_or(|o| o.is_lt()) {
        return Err(Error::WindowTooShort { window, period });
    }
    let weighted: Vec<(f64, f64)> = y
        .iter()
        .zip(theta)
        .map(|(&(t, v), &(_, th))| (t, v * (1.0 - 2.0 * (2.0 * th).cos())))
        .collect();
    let mean_y = moving_average(y, window)?;
    let p2 = moving_average(&weighted, window)?;
    let p1 = mean_y
        .iter()
        .zip(&p2)
        .map(|(&(t, m), &(_, q))| (t, 2.0 * m - q))
        .collect();
    Ok((p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{rot12, PureState};

    fn frozen_signal(xi: &PureState, dt: f64, n: usize) -> (TimeSeries, TimeSeries) {
        (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                let y = rot12(t).conjugate_sym(xi.matrix()).get(0, 0);
                ((t, y), (t, t))
            })
            .unzip()
    }

    #[test]
    fn recovers_frozen_populations() {
        let xi = PureState::from_amplitudes([0.6, 0.5, 0.3]).unwrap();
        let (y, th) = frozen_signal(&xi, 0.01, 5000);
        let (p1, p2) = demodulate_populations(&y, &th, default_window(1.0)).unwrap();
        assert!(!p1.is_empty());
        for (&(_, a), &(_, b)) in p1.iter().zip(&p2) {
            assert!((a - xi.population(1).unwrap()).abs() < 1e-3);
            assert!((b - xi.population(2).unwrap()).abs() < 1e-3);
        }
    }

    #[test]
    fn moving_average_of_linear_ramp() {
        let s: Vec<(f64, f64)> = (0..=100).map(|k| (k as f64 * 0.1, k as f64 * 0.1)).collect();
        let m = moving_average(&s, 2.0).unwrap();
        assert_eq!(m.len(), 81);
        for &(t, v) in &m {
            assert!((v - (t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn short_window_is_rejected() {
        let xi = PureState::basis(1).unwrap();
        let (y, th) = frozen_signal(&xi, 0.01, 1000);
        let err = demodulate_populations(&y, &th, 3.0).unwrap_err();
        assert!(matches!(err, Error::WindowTooShort { .. }));
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(matches!(moving_average(&[], 1.0), Err(Error::EmptySeries)));
        let y = vec![(0.0, 1.0), (1.0, 1.0)];
        assert!(demodulate_populations(&y, &y[..1], 10.0).is_err());
    }
}
