//! The three model families: lagged linear baseline, plain LSTM regressor,
//! and the physics-constrained LSTM.
//!
//! The physics-constrained model augments the network with three trainable
//! coefficients over the raw current state,
//!
//! ```text
//! delta_phys = l1 * (ambient_t - bearing_{t-1}) + l2 * omega_t + l3 * power_t
//! ```
//!
//! and trains on `L = L_pred + alpha * L_phys`, where `L_phys` penalizes the
//! distance between the network's implied one-step temperature change
//! (`prediction - bearing_{t-1}`) and `delta_phys`. The coefficients absorb
//! all unit and timestep factors, so the physics head always sees raw
//! (unstandardized) inputs while the network sees standardized ones.

mod checkpoint;
mod linear;
mod recurrent;

pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CheckpointError,
};
pub use linear::{fit_linear, linear_features, linear_predict, LinearFit, LinearModel};
pub use recurrent::{
    batch_gradients_flat, batch_loss_flat, physics_delta, PcRnnModel, RnnModel, TrainBatch,
    TrainSample, LAMBDA_COUNT,
};

use thiserror::Error;

use crate::data::WindowSample;
use crate::nn::NnError;
use crate::num::{real, Real};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("not enough windows: need {needed}, got {got}")]
    NotEnoughWindows { needed: usize, got: usize },
    #[error("window has {got} lags, model expects {expected}")]
    LagMismatch { expected: usize, got: usize },
    #[error("input lists have mismatched lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Model family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelFamily {
    Linear,
    Rnn,
    PcRnn,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Linear => "linear",
            ModelFamily::Rnn => "rnn",
            ModelFamily::PcRnn => "pcrnn",
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ModelFamily::Linear),
            "rnn" => Ok(ModelFamily::Rnn),
            "pcrnn" => Ok(ModelFamily::PcRnn),
            other => Err(format!("unknown model family `{other}` (expected linear|rnn|pcrnn)")),
        }
    }
}

/// A trained model of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel<S> {
    Linear(LinearModel<S>),
    Rnn(RnnModel<S>),
    PcRnn(PcRnnModel<S>),
}

impl<S: Real> TrainedModel<S> {
    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::Linear(_) => ModelFamily::Linear,
            TrainedModel::Rnn(_) => ModelFamily::Rnn,
            TrainedModel::PcRnn(_) => ModelFamily::PcRnn,
        }
    }

    pub fn lags(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.lags,
            TrainedModel::Rnn(m) => m.lags,
            TrainedModel::PcRnn(m) => m.rnn.lags,
        }
    }

    /// Nowcast from a raw (unstandardized) window.
    pub fn nowcast(&self, window: &WindowSample<S>) -> Result<S, ModelError> {
        match self {
            TrainedModel::Linear(m) => linear_predict(m, window),
            TrainedModel::Rnn(m) => m.nowcast(window),
            TrainedModel::PcRnn(m) => m.rnn.nowcast(window),
        }
    }
}

/// Loss components of one batch, all in squared degC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<S> {
    pub pred_loss: S,
    pub phys_loss: S,
    pub total: S,
    pub alpha_weight: S,
}

impl<S: Real> LossBreakdown<S> {
    pub fn zero(alpha_weight: S) -> Self {
        LossBreakdown { pred_loss: S::zero(), phys_loss: S::zero(), total: S::zero(), alpha_weight }
    }
}

/// Predicted one-step temperature change: `prediction - previous temperature`.
#[inline]
pub fn euler_delta<S: Real>(prediction: S, previous_temp: S) -> S {
    prediction - previous_temp
}

/// Mean-squared prediction loss plus `alpha` times the mean-squared physics
/// residual.
pub fn combined_loss<S: Real>(
    predictions: &[S],
    targets: &[S],
    euler_deltas: &[S],
    physics_deltas: &[S],
    alpha_weight: S,
) -> Result<LossBreakdown<S>, ModelError> {
    let n = predictions.len();
    if targets.len() != n {
        return Err(ModelError::LengthMismatch(n, targets.len()));
    }
    if euler_deltas.len() != physics_deltas.len() || euler_deltas.len() != n {
        return Err(ModelError::LengthMismatch(n, euler_deltas.len().min(physics_deltas.len())));
    }
    if n == 0 {
        return Ok(LossBreakdown::zero(alpha_weight));
    }
    let count = real::<S>(n as f64);
    let pred_loss = predictions
        .iter()
        .zip(targets)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<S>()
        / count;
    let phys_loss = euler_deltas
        .iter()
        .zip(physics_deltas)
        .map(|(&e, &p)| (e - p) * (e - p))
        .sum::<S>()
        / count;
    Ok(LossBreakdown { pred_loss, phys_loss, total: pred_loss + alpha_weight * phys_loss, alpha_weight })
}
