//! Training loop and the experiment protocol.
//!
//! Recurrent families train with mini-batch Adam on the combined loss (the
//! plain LSTM is the same loop with the physics weight forced to zero, so a
//! physics-constrained run with `alpha_weight = 0` reproduces the plain
//! model's trajectory exactly under shared seeds). Validation is the
//! chronological tail of the training windows, never a random subset:
//! these series are strongly autocorrelated and a random split would leak.

mod experiment;

pub use experiment::{
    run_experiment, write_repeats_csv, write_summary_csv, EvalCategory, ExperimentError,
    ExperimentReport, ExperimentSpec, ReportRow, RepeatRow,
};

use thiserror::Error;

use crate::data::{fit_standardization, DataError, WindowSample, FEATURE_COUNT};
use crate::models::{
    batch_gradients_flat, batch_loss_flat, fit_linear, linear_predict, LossBreakdown, ModelError,
    ModelFamily, PcRnnModel, RnnModel, TrainBatch, TrainSample, TrainedModel, LAMBDA_COUNT,
};
use crate::nn::{init_params, AdamState, ParamLayout};
use crate::num::{real, Real};
use crate::rng::{chacha, derive_seed};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("not enough windows to train: {got} (need at least {needed})")]
    NotEnoughWindows { needed: usize, got: usize },
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams<S> {
    pub batch_size: usize,
    /// Fraction of training windows held out as the chronological tail.
    pub validation_fraction: S,
    pub learning_rate: S,
    /// Weight of the physics loss for the physics-constrained family.
    pub alpha_weight: S,
    /// Number of lags `M`; windows carry `M + 1` states.
    pub lags: usize,
    pub hidden_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl<S: Real> Default for Hyperparams<S> {
    fn default() -> Self {
        Hyperparams {
            batch_size: 16,
            validation_fraction: real(0.2),
            learning_rate: real(0.001),
            alpha_weight: real(0.25),
            lags: 5,
            hidden_size: 16,
            max_epochs: 100,
            patience: 10,
            seed: 42,
        }
    }
}

/// Losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats<S> {
    /// Mean of the batch losses seen during the epoch.
    pub train: LossBreakdown<S>,
    /// Full pass over the validation tail after the epoch.
    pub validation: LossBreakdown<S>,
}

pub type TrainingHistory<S> = Vec<EpochStats<S>>;

const STREAM_INIT: u64 = 0x11;
const STREAM_SHUFFLE: u64 = 0x12;

impl<S: Real> Hyperparams<S> {
    pub fn validate(&self) -> Result<(), TrainError> {
        let frac_ok = self.validation_fraction > S::zero() && self.validation_fraction < S::one();
        if !frac_ok {
            return Err(TrainError::InvalidHyperparams(
                "validation_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.alpha_weight < S::zero() {
            return Err(TrainError::InvalidHyperparams("alpha_weight must be >= 0".into()));
        }
        if self.batch_size == 0 || self.hidden_size == 0 {
            return Err(TrainError::InvalidHyperparams(
                "batch_size and hidden_size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Trains one model family on raw training windows.
///
/// Returns the parameters with the best validation loss seen (the linear
/// family is a closed-form fit and reports a single pseudo-epoch).
pub fn train<S: Real>(
    family: ModelFamily,
    windows: &[WindowSample<S>],
    hyper: &Hyperparams<S>,
) -> Result<(TrainedModel<S>, TrainingHistory<S>), TrainError> {
    hyper.validate()?;
    // Chronological split: validation is the tail by target time.
    let mut ordered: Vec<&WindowSample<S>> = windows.iter().collect();
    ordered.sort_by(|a, b| (a.timestamp, &a.turbine_id).cmp(&(b.timestamp, &b.turbine_id)));
    let n = ordered.len();
    let n_val = ((real::<S>(n as f64) * hyper.validation_fraction).ceil())
        .to_usize()
        .unwrap_or(0)
        .min(n);
    let n_fit = n - n_val;
    if n_fit == 0 || n_val == 0 {
        return Err(TrainError::NotEnoughWindows { needed: 2, got: n });
    }
    let (fit_windows, val_windows) = ordered.split_at(n_fit);

    if family == ModelFamily::Linear {
        return train_linear(fit_windows, val_windows, hyper);
    }

    // Standardization is fitted on the gradient-descent portion only so the
    // validation tail stays untouched.
    let owned: Vec<WindowSample<S>> = fit_windows.iter().map(|w| (*w).clone()).collect();
    let stats = fit_standardization(&owned)?;
    let fit_samples: Vec<TrainSample<S>> =
        fit_windows.iter().map(|w| TrainSample::from_window(w, &stats)).collect();
    let val_samples: Vec<TrainSample<S>> =
        val_windows.iter().map(|w| TrainSample::from_window(w, &stats)).collect();

    let alpha = match family {
        ModelFamily::PcRnn => hyper.alpha_weight,
        _ => S::zero(),
    };

    // Both recurrent families share one layout (physics coefficients
    // included); with alpha = 0 the coefficient gradients are exactly zero
    // and never touch the rest, which is what makes the two families'
    // trajectories identical under shared seeds.
    let layout = ParamLayout::new(FEATURE_COUNT, hyper.hidden_size, LAMBDA_COUNT);
    let (lstm, dense) = init_params::<S>(
        derive_seed(hyper.seed, STREAM_INIT),
        FEATURE_COUNT,
        hyper.hidden_size,
    );
    let lambda_init = vec![S::zero(); LAMBDA_COUNT];
    let mut flat = layout.flatten(&lstm, &dense, &lambda_init).map_err(ModelError::from)?;

    let mut adam = AdamState::new(layout.len(), hyper.learning_rate);
    let mut shuffle_rng = chacha(derive_seed(hyper.seed, STREAM_SHUFFLE));
    let mut order: Vec<usize> = (0..fit_samples.len()).collect();
    let mut history = Vec::new();
    let mut best_flat = flat.clone();
    let mut best_val = S::infinity();
    let mut epochs_since_best = 0usize;

    for epoch in 0..hyper.max_epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);

        let mut train_acc = LossBreakdown::zero(alpha);
        let mut seen = S::zero();
        let mut scratch: Vec<TrainSample<S>> = Vec::with_capacity(hyper.batch_size);
        for (batch_index, chunk) in order.chunks(hyper.batch_size.max(1)).enumerate() {
            scratch.clear();
            scratch.extend(chunk.iter().map(|&i| fit_samples[i].clone()));
            let batch = TrainBatch { samples: &scratch };
            let (loss, grads) = batch_gradients_flat(&layout, &flat, &stats, &batch, alpha)
                .map_err(|e| match e {
                    ModelError::NonFiniteLoss => {
                        TrainError::NonFiniteLoss { epoch, batch: batch_index }
                    }
                    other => TrainError::Model(other),
                })?;
            adam.step(&mut flat, &grads).map_err(ModelError::from)?;

            let weight = real::<S>(chunk.len() as f64);
            train_acc.pred_loss += loss.pred_loss * weight;
            train_acc.phys_loss += loss.phys_loss * weight;
            train_acc.total += loss.total * weight;
            seen += weight;
        }
        train_acc.pred_loss /= seen;
        train_acc.phys_loss /= seen;
        train_acc.total /= seen;

        let validation =
            batch_loss_flat(&layout, &flat, &stats, &TrainBatch { samples: &val_samples }, alpha)
                .map_err(|e| match e {
                    ModelError::NonFiniteLoss => {
                        TrainError::NonFiniteLoss { epoch, batch: usize::MAX }
                    }
                    other => TrainError::Model(other),
                })?;
        history.push(EpochStats { train: train_acc, validation });

        if validation.total < best_val {
            best_val = validation.total;
            best_flat.copy_from_slice(&flat);
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= hyper.patience {
                break;
            }
        }
    }

    let (lstm, head, extra) = layout.unflatten(&best_flat).map_err(ModelError::from)?;
    let rnn = RnnModel { lstm, head, stats, lags: hyper.lags };
    let model = match family {
        ModelFamily::PcRnn => TrainedModel::PcRnn(PcRnnModel {
            rnn,
            lambda: [extra[0], extra[1], extra[2]],
        }),
        _ => TrainedModel::Rnn(rnn),
    };
    Ok((model, history))
}

fn train_linear<S: Real>(
    fit_windows: &[&WindowSample<S>],
    val_windows: &[&WindowSample<S>],
    hyper: &Hyperparams<S>,
) -> Result<(TrainedModel<S>, TrainingHistory<S>), TrainError> {
    let owned: Vec<WindowSample<S>> = fit_windows.iter().map(|w| (*w).clone()).collect();
    let fit = fit_linear(&owned, hyper.lags).map_err(|e| match e {
        ModelError::NotEnoughWindows { needed, got } => TrainError::NotEnoughWindows { needed, got },
        other => TrainError::Model(other),
    })?;
    let mse = |windows: &[&WindowSample<S>]| -> Result<S, TrainError> {
        let mut acc = S::zero();
        for w in windows {
            let err = linear_predict(&fit.model, w).map_err(TrainError::Model)? - w.target;
            acc += err * err;
        }
        Ok(acc / real(windows.len().max(1) as f64))
    };
    let train_mse = mse(fit_windows)?;
    let val_mse = mse(val_windows)?;
    let zero = S::zero();
    let history = vec![EpochStats {
        train: LossBreakdown { pred_loss: train_mse, phys_loss: zero, total: train_mse, alpha_weight: zero },
        validation: LossBreakdown { pred_loss: val_mse, phys_loss: zero, total: val_mse, alpha_weight: zero },
    }];
    Ok((TrainedModel::Linear(fit.model), history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_windows;
    use crate::sim::{generate_plant, preset, GenerateOptions};
    use chrono::{TimeZone, Utc};

    fn sim_windows(steps: usize, seed: u64) -> Vec<WindowSample<f64>> {
        let model = preset::<f64>("A").unwrap();
        let opts = GenerateOptions {
            plant_id: "A".into(),
            n_turbines: 1,
            steps,
            start: Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(),
            seed,
        };
        let (dataset, _) = generate_plant(&model, &opts).unwrap();
        let (windows, _) = build_windows(&dataset.turbines["T00"], 5);
        windows
    }

    fn quick_hyper(max_epochs: usize) -> Hyperparams<f64> {
        Hyperparams { max_epochs, patience: 100, hidden_size: 8, ..Default::default() }
    }

    #[test]
    fn zero_epochs_returns_initialized_model_and_empty_history() {
        let windows = sim_windows(200, 1);
        let (model, history) = train(ModelFamily::Rnn, &windows, &quick_hyper(0)).unwrap();
        assert!(history.is_empty());
        match model {
            TrainedModel::Rnn(m) => assert_eq!(m.lags, 5),
            other => panic!("unexpected family {:?}", other.family()),
        }
    }

    #[test]
    fn same_seed_gives_identical_checkpoints() {
        let windows = sim_windows(300, 2);
        let hyper = quick_hyper(3);
        let (a, ha) = train(ModelFamily::PcRnn, &windows, &hyper).unwrap();
        let (b, hb) = train(ModelFamily::PcRnn, &windows, &hyper).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
    }

    #[test]
    fn training_reduces_validation_loss_substantially() {
        // Noise-free plant, small model: ten-fold reduction against epoch 0.
        let mut model = preset::<f64>("A").unwrap();
        model.physics.temp_noise_std = 0.0;
        model.physics.sensor_noise_std = 0.0;
        model.ambient.noise_std = 0.0;
        let opts = GenerateOptions {
            plant_id: "A".into(),
            n_turbines: 1,
            steps: 2000,
            start: Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(),
            seed: 3,
        };
        let (dataset, _) = generate_plant(&model, &opts).unwrap();
        let (windows, _) = build_windows(&dataset.turbines["T00"], 5);
        let hyper = Hyperparams { max_epochs: 60, patience: 60, hidden_size: 8, ..Default::default() };
        let (_, history) = train(ModelFamily::Rnn, &windows, &hyper).unwrap();
        let first = history.first().unwrap().validation.pred_loss;
        let best = history.iter().map(|e| e.validation.pred_loss).fold(f64::INFINITY, f64::min);
        assert!(
            best * 10.0 <= first,
            "validation loss went from {first} to {best}, less than 10x"
        );
    }

    #[test]
    fn alpha_zero_pcrnn_matches_rnn_trajectory() {
        let windows = sim_windows(300, 5);
        let hyper = Hyperparams { alpha_weight: 0.0, ..quick_hyper(3) };
        let (pc, _) = train(ModelFamily::PcRnn, &windows, &hyper).unwrap();
        let (rnn, _) = train(ModelFamily::Rnn, &windows, &hyper).unwrap();
        let (TrainedModel::PcRnn(pc), TrainedModel::Rnn(rnn)) = (pc, rnn) else {
            panic!("unexpected families");
        };
        assert_eq!(pc.rnn, rnn);
        assert_eq!(pc.lambda, [0.0; 3]);
    }

    #[test]
    fn linear_family_has_single_history_row() {
        let windows = sim_windows(300, 6);
        let (model, history) = train(ModelFamily::Linear, &windows, &quick_hyper(10)).unwrap();
        assert_eq!(history.len(), 1);
        assert!(matches!(model, TrainedModel::Linear(_)));
        assert!(history[0].train.pred_loss.is_finite());
        assert!(history[0].validation.pred_loss.is_finite());
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let windows = sim_windows(200, 8);
        let bad = Hyperparams { validation_fraction: 1.0, ..quick_hyper(1) };
        assert!(matches!(
            train(ModelFamily::Rnn, &windows, &bad),
            Err(TrainError::InvalidHyperparams(_))
        ));
        let bad = Hyperparams { alpha_weight: -0.5, ..quick_hyper(1) };
        assert!(matches!(
            train(ModelFamily::PcRnn, &windows, &bad),
            Err(TrainError::InvalidHyperparams(_))
        ));
    }

    #[test]
    fn too_few_windows_is_an_error() {
        let windows = sim_windows(200, 7);
        assert!(matches!(
            train(ModelFamily::Rnn, &windows[..1], &quick_hyper(1)),
            Err(TrainError::NotEnoughWindows { .. })
        ));
    }
}
