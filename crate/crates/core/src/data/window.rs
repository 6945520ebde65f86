//! Supervised window extraction and feature standardization.
//!
//! A window targeting time `t` holds the state vectors `x_{t-M} .. x_t`
//! where `x_s = (ambient_s, rotor_s, power_s, bearing_{s-1})`; the target is
//! the bearing temperature at `t`. Because the state carries the previous
//! bearing temperature, a window needs `M + 2` contiguous records.

use std::sync::Arc;

use chrono::{DateTime, Utc};

use crate::num::Real;

use super::{DataError, Gap, TurbineSeries, GRID_SECONDS};

/// State-vector width: ambient, rotor speed, power, previous bearing temp.
pub const FEATURE_COUNT: usize = 4;

/// One supervised nowcasting example.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample<S> {
    /// `M + 1` state vectors, oldest first.
    pub states: Vec<[S; FEATURE_COUNT]>,
    /// Bearing temperature at the window's target time, degC.
    pub target: S,
    pub turbine_id: Arc<str>,
    /// Target time `t`.
    pub timestamp: DateTime<Utc>,
}

impl<S: Real> WindowSample<S> {
    /// Number of lags `M`.
    pub fn lags(&self) -> usize {
        self.states.len() - 1
    }

    /// The current-time state `x_t` (the last one).
    pub fn final_state(&self) -> [S; FEATURE_COUNT] {
        *self.states.last().expect("windows hold at least one state")
    }

    /// Bearing temperature at `t - 1`, i.e. the last state's fourth entry.
    pub fn previous_bearing_temp(&self) -> S {
        self.final_state()[3]
    }
}

/// Builds every feasible window with `lags` lags, plus the gap report.
///
/// Gaps are not errors; they just reduce the yield since windows must span
/// `lags + 2` contiguous records.
pub fn build_windows<S: Real>(
    series: &TurbineSeries<S>,
    lags: usize,
) -> (Vec<WindowSample<S>>, Vec<Gap>) {
    let gaps = series.gaps();
    let records = &series.records;
    let span = lags + 2;
    let mut windows = Vec::new();
    if records.len() < span {
        return (windows, gaps);
    }
    let id: Arc<str> = Arc::from(series.turbine_id.as_str());
    let span_seconds = (span as i64 - 1) * GRID_SECONDS;
    for t in (span - 1)..records.len() {
        let first = t + 1 - span;
        // Strictly increasing grid timestamps: the span is contiguous iff the
        // end-to-end duration matches.
        let dt = (records[t].timestamp - records[first].timestamp).num_seconds();
        if dt != span_seconds {
            continue;
        }
        let states = (first + 1..=t)
            .map(|s| {
                [
                    records[s].ambient_temp,
                    records[s].rotor_speed,
                    records[s].power,
                    records[s - 1].bearing_temp,
                ]
            })
            .collect();
        windows.push(WindowSample {
            states,
            target: records[t].bearing_temp,
            turbine_id: Arc::clone(&id),
            timestamp: records[t].timestamp,
        });
    }
    (windows, gaps)
}

/// Per-feature mean and population standard deviation over every state
/// vector of a window set, plus the same for the target temperature.
///
/// The target shares the bearing-temperature feature statistics by
/// construction (feature 3 is the lagged bearing temperature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizationStats<S> {
    pub mean: [S; FEATURE_COUNT],
    pub std: [S; FEATURE_COUNT],
}

const FEATURE_NAMES: [&str; FEATURE_COUNT] = ["ambient_temp", "rotor_speed", "power", "bearing_temp"];

/// Fits standardization over all state vectors (Welford's accumulation).
pub fn fit_standardization<S: Real>(
    windows: &[WindowSample<S>],
) -> Result<StandardizationStats<S>, DataError> {
    if windows.is_empty() {
        return Err(DataError::EmptyWindowSet);
    }
    let mut count = S::zero();
    let mut mean = [S::zero(); FEATURE_COUNT];
    let mut m2 = [S::zero(); FEATURE_COUNT];
    for window in windows {
        for state in &window.states {
            count += S::one();
            for f in 0..FEATURE_COUNT {
                let delta = state[f] - mean[f];
                mean[f] += delta / count;
                m2[f] += delta * (state[f] - mean[f]);
            }
        }
    }
    let mut std = [S::zero(); FEATURE_COUNT];
    for f in 0..FEATURE_COUNT {
        std[f] = (m2[f] / count).sqrt();
        if std[f] <= S::zero() {
            return Err(DataError::DegenerateFeature { feature: FEATURE_NAMES[f] });
        }
    }
    Ok(StandardizationStats { mean, std })
}

/// Standardizes every state (and the target, via the bearing-temperature
/// statistics).
pub fn apply_standardization<S: Real>(
    window: &WindowSample<S>,
    stats: &StandardizationStats<S>,
) -> WindowSample<S> {
    let states = window
        .states
        .iter()
        .map(|state| std::array::from_fn(|f| (state[f] - stats.mean[f]) / stats.std[f]))
        .collect();
    WindowSample {
        states,
        target: (window.target - stats.mean[3]) / stats.std[3],
        turbine_id: Arc::clone(&window.turbine_id),
        timestamp: window.timestamp,
    }
}

/// Inverse of [`apply_standardization`].
pub fn invert_standardization<S: Real>(
    window: &WindowSample<S>,
    stats: &StandardizationStats<S>,
) -> WindowSample<S> {
    let states = window
        .states
        .iter()
        .map(|state| std::array::from_fn(|f| state[f] * stats.std[f] + stats.mean[f]))
        .collect();
    WindowSample {
        states,
        target: window.target * stats.std[3] + stats.mean[3],
        turbine_id: Arc::clone(&window.turbine_id),
        timestamp: window.timestamp,
    }
}

/// Maps a standardized temperature prediction back to degC.
#[inline]
pub fn destandardize_temperature<S: Real>(value: S, stats: &StandardizationStats<S>) -> S {
    value * stats.std[3] + stats.mean[3]
}

/// Brute-force window count: enumerate candidate spans and check contiguity
/// record by record. Test oracle for [`build_windows`].
#[cfg(test)]
pub(crate) fn count_windows_by_enumeration<S: Real>(
    series: &TurbineSeries<S>,
    lags: usize,
) -> usize {
    let records = &series.records;
    let span = lags + 2;
    let mut count = 0;
    for t in 0..records.len() {
        if t + 1 < span {
            continue;
        }
        let first = t + 1 - span;
        let contiguous = (first..t).all(|k| {
            (records[k + 1].timestamp - records[k].timestamp).num_seconds() == GRID_SECONDS
        });
        if contiguous {
            count += 1;
        }
    }
    count
}
