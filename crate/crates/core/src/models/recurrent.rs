//! LSTM regressor and its physics-constrained variant.
//!
//! Both share one architecture: a single-layer LSTM over the standardized
//! state sequence, a scalar dense head, and destandardization back to degC.
//! The physics-constrained variant adds three trainable coefficients applied
//! to the raw final state and a soft-constraint loss term (see the module
//! docs in [`super`]).
//!
//! The gradient path is hand-derived reverse mode; its contract is the
//! central finite-difference check in the tests below.

use crate::data::{
    apply_standardization, destandardize_temperature, StandardizationStats, WindowSample,
    FEATURE_COUNT,
};
use crate::nn::{
    dense_forward, lstm_backward, lstm_forward, DenseParams, LstmGrads, LstmParams, ParamLayout,
};
use crate::num::{real, Real};

use super::{LossBreakdown, ModelError};

/// Number of physics coefficients.
pub const LAMBDA_COUNT: usize = 3;

/// Plain LSTM nowcaster.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel<S> {
    pub lstm: LstmParams<S>,
    pub head: DenseParams<S>,
    pub stats: StandardizationStats<S>,
    pub lags: usize,
}

/// LSTM nowcaster plus trainable physics coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PcRnnModel<S> {
    pub rnn: RnnModel<S>,
    /// `(l1, l2, l3)` over `(ambient - prev bearing, rotor speed, power)`.
    pub lambda: [S; LAMBDA_COUNT],
}

impl<S: Real> RnnModel<S> {
    /// Prediction in degC from an already-standardized window.
    pub fn predict_standardized(&self, window: &WindowSample<S>) -> Result<S, ModelError> {
        if window.lags() != self.lags {
            return Err(ModelError::LagMismatch { expected: self.lags, got: window.lags() });
        }
        let flat: Vec<S> = window.states.iter().flatten().copied().collect();
        let (hidden, _) = lstm_forward(&self.lstm, &flat)?;
        let y = dense_forward(&self.head, &hidden)?;
        Ok(destandardize_temperature(y, &self.stats))
    }

    /// Prediction in degC from a raw window (standardizes internally).
    pub fn nowcast(&self, window: &WindowSample<S>) -> Result<S, ModelError> {
        self.predict_standardized(&apply_standardization(window, &self.stats))
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.lstm.input_size, self.lstm.hidden_size, 0)
    }
}

impl<S: Real> PcRnnModel<S> {
    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.rnn.lstm.input_size, self.rnn.lstm.hidden_size, LAMBDA_COUNT)
    }
}

/// Physics-implied temperature change from the raw current state.
pub fn physics_delta<S: Real>(lambda: &[S; LAMBDA_COUNT], raw_state: &[S; FEATURE_COUNT]) -> S {
    lambda[0] * (raw_state[0] - raw_state[3]) + lambda[1] * raw_state[1] + lambda[2] * raw_state[2]
}

impl<S: Real> PcRnnModel<S> {
    /// Physics-implied temperature change for a raw window's final state.
    pub fn physics_delta(&self, raw_state: &[S; FEATURE_COUNT]) -> S {
        physics_delta(&self.lambda, raw_state)
    }
}

/// One training example: standardized input sequence plus the raw quantities
/// the losses are computed in.
#[derive(Debug, Clone)]
pub struct TrainSample<S> {
    /// Flattened standardized states, `(lags + 1) * 4` values.
    pub inputs: Vec<S>,
    /// Raw current state `(ambient, rotor, power, prev bearing)`.
    pub raw_final: [S; FEATURE_COUNT],
    /// Raw target temperature, degC.
    pub target: S,
}

impl<S: Real> TrainSample<S> {
    pub fn from_window(window: &WindowSample<S>, stats: &StandardizationStats<S>) -> Self {
        let standardized = apply_standardization(window, stats);
        TrainSample {
            inputs: standardized.states.iter().flatten().copied().collect(),
            raw_final: window.final_state(),
            target: window.target,
        }
    }
}

/// A batch view used by the training loop and the gradient tests.
pub struct TrainBatch<'a, S> {
    pub samples: &'a [TrainSample<S>],
}

/// Evaluates the batch loss for parameters given in flat layout.
///
/// The layout's `extra` tail holds the physics coefficients; with
/// `extra == 0` the physics residual is computed with zero coefficients
/// (only meaningful together with `alpha = 0`).
pub fn batch_loss_flat<S: Real>(
    layout: &ParamLayout,
    flat: &[S],
    stats: &StandardizationStats<S>,
    batch: &TrainBatch<'_, S>,
    alpha_weight: S,
) -> Result<LossBreakdown<S>, ModelError> {
    let (lstm, dense, extra) = layout.unflatten(flat)?;
    let lambda = lambda_from_extra(&extra);
    let n = batch.samples.len();
    if n == 0 {
        return Ok(LossBreakdown::zero(alpha_weight));
    }
    let count = real::<S>(n as f64);
    let mut pred_loss = S::zero();
    let mut phys_loss = S::zero();
    for sample in batch.samples {
        let (hidden, _) = lstm_forward(&lstm, &sample.inputs)?;
        let y = dense_forward(&dense, &hidden)?;
        let prediction = destandardize_temperature(y, stats);
        let err_pred = prediction - sample.target;
        let delta_net = prediction - sample.raw_final[3];
        let delta_phys = physics_delta(&lambda, &sample.raw_final);
        let err_phys = delta_net - delta_phys;
        pred_loss += err_pred * err_pred;
        phys_loss += err_phys * err_phys;
    }
    pred_loss /= count;
    phys_loss /= count;
    let total = pred_loss + alpha_weight * phys_loss;
    if !total.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }
    Ok(LossBreakdown { pred_loss, phys_loss, total, alpha_weight })
}

/// Batch loss and analytic gradients (flat layout, same ordering as the
/// parameters).
///
/// Per sample, with prediction `T = mean + std * y` and physics residual
/// `e = (T - prev) - delta_phys`, the gradient into the network output is
/// `dL/dT = 2 (T - target) / N + alpha * 2 e / N`, backpropagated through
/// the dense head and the LSTM; the coefficient gradients are
/// `dL/dl_k = -alpha * 2 e phi_k / N` for the raw features `phi`.
pub fn batch_gradients_flat<S: Real>(
    layout: &ParamLayout,
    flat: &[S],
    stats: &StandardizationStats<S>,
    batch: &TrainBatch<'_, S>,
    alpha_weight: S,
) -> Result<(LossBreakdown<S>, Vec<S>), ModelError> {
    let (lstm, dense, extra) = layout.unflatten(flat)?;
    let lambda = lambda_from_extra(&extra);
    let n = batch.samples.len();
    if n == 0 {
        return Ok((LossBreakdown::zero(alpha_weight), vec![S::zero(); layout.len()]));
    }
    let count = real::<S>(n as f64);
    let two = real::<S>(2.0);

    let mut pred_loss = S::zero();
    let mut phys_loss = S::zero();
    let mut lstm_grads = LstmGrads::zeros(lstm.input_size, lstm.hidden_size);
    let mut dense_w_grad = vec![S::zero(); lstm.hidden_size];
    let mut dense_b_grad = S::zero();
    let mut lambda_grad = [S::zero(); LAMBDA_COUNT];

    for sample in batch.samples {
        let (hidden, trace) = lstm_forward(&lstm, &sample.inputs)?;
        let y = dense_forward(&dense, &hidden)?;
        let prediction = destandardize_temperature(y, stats);

        let err_pred = prediction - sample.target;
        let delta_net = prediction - sample.raw_final[3];
        let phi = [
            sample.raw_final[0] - sample.raw_final[3],
            sample.raw_final[1],
            sample.raw_final[2],
        ];
        let delta_phys = lambda[0] * phi[0] + lambda[1] * phi[1] + lambda[2] * phi[2];
        let err_phys = delta_net - delta_phys;
        pred_loss += err_pred * err_pred;
        phys_loss += err_phys * err_phys;

        // d(loss)/d(prediction), both terms share the prediction path.
        let d_pred = two * err_pred / count + alpha_weight * two * err_phys / count;
        // Chain through destandardization: prediction = mean + std * y.
        let d_y = d_pred * stats.std[3];

        for (g, h) in dense_w_grad.iter_mut().zip(&hidden) {
            *g += d_y * *h;
        }
        dense_b_grad += d_y;
        let d_hidden: Vec<S> = dense.weights.iter().map(|&w| d_y * w).collect();
        lstm_backward(&lstm, &trace, &d_hidden, &mut lstm_grads)?;

        for k in 0..LAMBDA_COUNT {
            lambda_grad[k] += -alpha_weight * two * err_phys * phi[k] / count;
        }
    }

    pred_loss /= count;
    phys_loss /= count;
    let total = pred_loss + alpha_weight * phys_loss;
    if !total.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }

    let extra_grad = &lambda_grad[..layout.extra.min(LAMBDA_COUNT)];
    let grads = layout.flatten_grads(&lstm_grads, &dense_w_grad, dense_b_grad, extra_grad);
    Ok((LossBreakdown { pred_loss, phys_loss, total, alpha_weight }, grads))
}

fn lambda_from_extra<S: Real>(extra: &[S]) -> [S; LAMBDA_COUNT] {
    let mut lambda = [S::zero(); LAMBDA_COUNT];
    for (slot, value) in lambda.iter_mut().zip(extra) {
        *slot = *value;
    }
    lambda
}
