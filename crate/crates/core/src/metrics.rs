//! Evaluation metrics: RMSE, standard error of repeat means, and the
//! gradient-sign agreement of the physics head.

use thiserror::Error;

use crate::data::WindowSample;
use crate::models::PcRnnModel;
use crate::num::{real, Real};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),
}

/// Root mean squared error.
pub fn rmse<S: Real>(predictions: &[S], targets: &[S]) -> Result<S, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if predictions.len() != targets.len() {
        return Err(MetricsError::LengthMismatch(predictions.len(), targets.len()));
    }
    let n = real::<S>(predictions.len() as f64);
    let mse = predictions
        .iter()
        .zip(targets)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<S>()
        / n;
    Ok(mse.sqrt())
}

/// Standard error of the mean: sample standard deviation (denominator n-1)
/// divided by sqrt(n).
pub fn standard_error<S: Real>(values: &[S]) -> Result<S, MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewValues(n));
    }
    let count = real::<S>(n as f64);
    let mean = values.iter().copied().sum::<S>() / count;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() / (count - S::one());
    Ok((var / count).sqrt())
}

/// Threshold below which a temperature change counts as zero.
pub const ZERO_DELTA_THRESHOLD: f64 = 1e-9;

/// Outcome of a sign-agreement evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignAgreement {
    /// Samples where the physics delta and the measured delta agree in sign.
    pub agreeing: usize,
    /// Samples with both deltas nonzero (the denominator).
    pub counted: usize,
    /// Samples excluded because either delta is (numerically) zero.
    pub excluded: usize,
}

impl SignAgreement {
    pub fn fraction(&self) -> Option<f64> {
        (self.counted > 0).then(|| self.agreeing as f64 / self.counted as f64)
    }
}

/// Fraction of windows where the physics head's temperature change has the
/// same sign as the measured change `target - previous bearing temp`.
/// Samples where either delta is below [`ZERO_DELTA_THRESHOLD`] in magnitude
/// are excluded and counted separately.
pub fn gradient_sign_agreement<S: Real>(
    model: &PcRnnModel<S>,
    windows: &[WindowSample<S>],
) -> Result<SignAgreement, MetricsError> {
    if windows.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let threshold = real::<S>(ZERO_DELTA_THRESHOLD);
    let mut agreement = SignAgreement { agreeing: 0, counted: 0, excluded: 0 };
    for window in windows {
        let measured = window.target - window.previous_bearing_temp();
        let implied = model.physics_delta(&window.final_state());
        if measured.abs() < threshold || implied.abs() < threshold {
            agreement.excluded += 1;
            continue;
        }
        agreement.counted += 1;
        if (measured > S::zero()) == (implied > S::zero()) {
            agreement.agreeing += 1;
        }
    }
    Ok(agreement)
}
