//! Residual-based condition monitoring.
//!
//! A trained surrogate nowcasts the bearing temperature; the residual
//! `measured - predicted` is smoothed with an EWMA and compared against a
//! one-sided control limit. Detection is one-sided because bearing faults
//! heat, they never cool.
//!
//! Calibration follows the EWMA control-chart convention: `sigma0` is the
//! standard deviation of the *smoothed* calibration residuals, so the
//! `k * sigma0` limit is expressed on the same scale as the monitored
//! statistic. A nowcasting surrogate re-anchors on the measured previous
//! temperature every step, which shrinks a fault's residual footprint to its
//! per-step heat surplus; calibrating on the raw residual scale would make
//! any practical `k` deaf to that footprint. Commissioning
//! ([`commissioned_sigma0`]) additionally lifts the scale until the limit
//! clears the worst excursion the calibration period itself produced.

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::data::{build_windows, TurbineSeries, WindowSample};
use crate::models::{ModelError, TrainedModel};
use crate::num::{mean, real, Real};

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("series `{turbine}` yields no windows")]
    NoWindows { turbine: String },
    #[error("invalid alarm config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-timestep residuals, aligned to the evaluated windows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries<S> {
    pub turbine_id: String,
    pub timestamps: Vec<DateTime<Utc>>,
    pub values: Vec<S>,
}

impl<S: Real> ResidualSeries<S> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// EWMA-smoothed copy of this series.
    pub fn smoothed(&self, weight: S) -> ResidualSeries<S> {
        ResidualSeries {
            turbine_id: self.turbine_id.clone(),
            timestamps: self.timestamps.clone(),
            values: ewma(&self.values, weight),
        }
    }
}

/// Nowcast residuals `measured - predicted` over every feasible window.
pub fn residuals<S: Real>(
    model: &TrainedModel<S>,
    series: &TurbineSeries<S>,
) -> Result<ResidualSeries<S>, MonitorError> {
    let (windows, _) = build_windows(series, model.lags());
    if windows.is_empty() {
        return Err(MonitorError::NoWindows { turbine: series.turbine_id.clone() });
    }
    residuals_over_windows(model, &windows)
}

/// Same as [`residuals`] but over pre-built windows.
pub fn residuals_over_windows<S: Real>(
    model: &TrainedModel<S>,
    windows: &[WindowSample<S>],
) -> Result<ResidualSeries<S>, MonitorError> {
    let Some(first) = windows.first() else {
        return Err(MonitorError::NoWindows { turbine: String::new() });
    };
    let mut timestamps = Vec::with_capacity(windows.len());
    let mut values = Vec::with_capacity(windows.len());
    for window in windows {
        let prediction = model.nowcast(window)?;
        timestamps.push(window.timestamp);
        values.push(window.target - prediction);
    }
    Ok(ResidualSeries { turbine_id: first.turbine_id.to_string(), timestamps, values })
}

/// Exponentially weighted moving average: `s_t = w r_t + (1 - w) s_{t-1}`,
/// seeded with the first value.
pub fn ewma<S: Real>(values: &[S], weight: S) -> Vec<S> {
    assert!(
        weight > S::zero() && weight <= S::one(),
        "ewma weight must lie in (0, 1]"
    );
    let mut out = Vec::with_capacity(values.len());
    let mut state = S::zero();
    for (k, &value) in values.iter().enumerate() {
        state = if k == 0 { value } else { weight * value + (S::one() - weight) * state };
        out.push(state);
    }
    out
}

/// Steps an EWMA needs before its seeding (`s_0 = r_0`) has washed out;
/// detection and commissioning ignore this prefix. Three decay constants
/// shrink even a pathological seed (tens of smoothed sigmas) well below a
/// `k = 4` limit.
pub fn burn_in_steps<S: Real>(weight: S) -> usize {
    (real::<S>(3.0) / weight).ceil().to_usize().unwrap_or(1).max(1)
}

/// Population standard deviation of the smoothed calibration residuals
/// (burn-in prefix excluded).
pub fn calibrate_sigma0<S: Real>(calibration: &ResidualSeries<S>, weight: S) -> S {
    let smoothed = ewma(&calibration.values, weight);
    let settled = &smoothed[burn_in_steps(weight).min(smoothed.len())..];
    let center = mean(settled);
    let var = settled.iter().map(|&v| (v - center) * (v - center)).sum::<S>()
        / real(settled.len().max(1) as f64);
    var.sqrt()
}

/// Commissioning rule for the threshold scale: the smoothed-residual std,
/// raised so that `k * sigma0` clears the worst excursion seen during
/// calibration. A limit the calibration period itself would have tripped is
/// not a usable limit.
pub fn commissioned_sigma0<S: Real>(
    calibration: &ResidualSeries<S>,
    weight: S,
    threshold_sigmas: S,
) -> S {
    let sigma = calibrate_sigma0(calibration, weight);
    let smoothed = ewma(&calibration.values, weight);
    let settled = &smoothed[burn_in_steps(weight).min(smoothed.len())..];
    let peak = settled.iter().copied().fold(S::zero(), S::max);
    sigma.max(peak / threshold_sigmas)
}

/// Alarm thresholds. `sigma0` is on the smoothed-residual scale (see the
/// module docs); `threshold_sigmas` is the control-limit multiplier `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlarmConfig<S> {
    pub ewma_weight: S,
    pub threshold_sigmas: S,
    pub sigma0: S,
    pub min_consecutive: usize,
}

impl<S: Real> AlarmConfig<S> {
    pub fn validate(&self) -> Result<(), MonitorError> {
        if !(self.ewma_weight > S::zero() && self.ewma_weight <= S::one()) {
            return Err(MonitorError::InvalidConfig("ewma_weight must lie in (0, 1]".into()));
        }
        if !(self.threshold_sigmas > S::zero()) {
            return Err(MonitorError::InvalidConfig("threshold_sigmas must be > 0".into()));
        }
        if !(self.sigma0 > S::zero()) {
            return Err(MonitorError::InvalidConfig("sigma0 must be > 0".into()));
        }
        if self.min_consecutive == 0 {
            return Err(MonitorError::InvalidConfig("min_consecutive must be >= 1".into()));
        }
        Ok(())
    }
}

/// A sustained over-temperature deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlarmEvent<S> {
    /// First exceedance of the qualifying run.
    pub onset: DateTime<Utc>,
    pub peak_smoothed: S,
    /// Steps from onset until the smoothed residual released (fell below
    /// half the threshold) or the series ended.
    pub duration_steps: usize,
}

/// Scans a *smoothed* residual series for alarms.
///
/// An event starts once the smoothed residual exceeds `k * sigma0` for at
/// least `min_consecutive` consecutive steps (the onset is the first of
/// those) and runs until it falls below `k * sigma0 / 2` (hysteresis, so a
/// dip halfway below the limit does not split one incident into several).
/// The EWMA burn-in prefix is skipped: seeded at the first raw residual,
/// the statistic means nothing until the seed has decayed away (see
/// [`burn_in_steps`]).
pub fn detect<S: Real>(
    smoothed: &ResidualSeries<S>,
    config: &AlarmConfig<S>,
) -> Result<Vec<AlarmEvent<S>>, MonitorError> {
    config.validate()?;
    let burn_in = burn_in_steps(config.ewma_weight);
    let threshold = config.threshold_sigmas * config.sigma0;
    let release = threshold / real(2.0);

    enum State {
        Idle,
        Counting { start: usize, run: usize },
        Active { onset: usize, peak: usize },
    }

    let values = &smoothed.values;
    let mut events = Vec::new();
    let mut state = State::Idle;
    for (k, &s) in values.iter().enumerate() {
        state = match state {
            State::Idle => {
                if k >= burn_in && s > threshold {
                    if config.min_consecutive == 1 {
                        State::Active { onset: k, peak: k }
                    } else {
                        State::Counting { start: k, run: 1 }
                    }
                } else {
                    State::Idle
                }
            }
            State::Counting { start, run } => {
                if s > threshold {
                    if run + 1 >= config.min_consecutive {
                        let peak = (start..=k).fold(start, |best, i| {
                            if values[i] > values[best] {
                                i
                            } else {
                                best
                            }
                        });
                        State::Active { onset: start, peak }
                    } else {
                        State::Counting { start, run: run + 1 }
                    }
                } else {
                    State::Idle
                }
            }
            State::Active { onset, peak } => {
                if s < release {
                    events.push(AlarmEvent {
                        onset: smoothed.timestamps[onset],
                        peak_smoothed: values[peak],
                        duration_steps: k - onset,
                    });
                    State::Idle
                } else {
                    let peak = if s > values[peak] { k } else { peak };
                    State::Active { onset, peak }
                }
            }
        };
    }
    if let State::Active { onset, peak } = state {
        events.push(AlarmEvent {
            onset: smoothed.timestamps[onset],
            peak_smoothed: values[peak],
            duration_steps: values.len() - onset,
        });
    }
    Ok(events)
}
