//! Lagged linear baseline.
//!
//! Predicts the bearing temperature as an intercept plus a linear map over
//! the per-lag feature triples `(ambient - previous bearing temp, rotor
//! speed, power)`, fitted by ordinary least squares on a pivoted Householder
//! QR. Rank deficiency is reported and resolved with the minimum-norm
//! solution.

use crate::data::WindowSample;
use crate::linalg::{lstsq_min_norm, Mat};
use crate::num::Real;

use super::ModelError;

/// Features per lag: temperature difference, rotor speed, power.
pub const LINEAR_FEATURES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<S> {
    pub intercept: S,
    /// `(lags + 1) x 3` coefficients, row-major, row `k` = lag `k`.
    pub coefficients: Vec<S>,
    pub lags: usize,
}

impl<S: Real> LinearModel<S> {
    pub fn coefficient(&self, lag: usize, feature: usize) -> S {
        self.coefficients[lag * LINEAR_FEATURES + feature]
    }
}

/// Fit outcome: the model plus the numerical rank of the design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit<S> {
    pub model: LinearModel<S>,
    pub rank: usize,
    /// Columns in the design matrix (including the intercept).
    pub columns: usize,
}

impl<S: Real> LinearFit<S> {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.columns
    }
}

/// Extracts the `(lags + 1) x 3` feature matrix in raw units.
///
/// Row `k` holds the lag-`k` triple; lag 0 is the current time step, so row
/// `k` reads from state `lags - k`.
pub fn linear_features<S: Real>(window: &WindowSample<S>) -> Vec<S> {
    let lags = window.lags();
    let mut out = Vec::with_capacity((lags + 1) * LINEAR_FEATURES);
    for k in 0..=lags {
        let state = window.states[lags - k];
        out.push(state[0] - state[3]);
        out.push(state[1]);
        out.push(state[2]);
    }
    out
}

/// Ordinary least squares over all windows.
///
/// Needs at least `(lags + 1) * 3 + 1` windows (one per free parameter).
pub fn fit_linear<S: Real>(
    windows: &[WindowSample<S>],
    lags: usize,
) -> Result<LinearFit<S>, ModelError> {
    let p = (lags + 1) * LINEAR_FEATURES + 1;
    if windows.len() < p {
        return Err(ModelError::NotEnoughWindows { needed: p, got: windows.len() });
    }
    let n = windows.len();
    let mut design = Mat::zeros(n, p);
    let mut target = Vec::with_capacity(n);
    for (r, window) in windows.iter().enumerate() {
        if window.lags() != lags {
            return Err(ModelError::LagMismatch { expected: lags, got: window.lags() });
        }
        *design.at_mut(r, 0) = S::one();
        for (c, value) in linear_features(window).into_iter().enumerate() {
            *design.at_mut(r, c + 1) = value;
        }
        target.push(window.target);
    }
    let solution = lstsq_min_norm(design, target);
    let model = LinearModel {
        intercept: solution.x[0],
        coefficients: solution.x[1..].to_vec(),
        lags,
    };
    Ok(LinearFit { model, rank: solution.rank, columns: p })
}

/// `intercept + sum coefficients * features`.
pub fn linear_predict<S: Real>(
    model: &LinearModel<S>,
    window: &WindowSample<S>,
) -> Result<S, ModelError> {
    if window.lags() != model.lags {
        return Err(ModelError::LagMismatch { expected: model.lags, got: window.lags() });
    }
    let mut acc = model.intercept;
    for (coef, feature) in model.coefficients.iter().zip(linear_features(window)) {
        acc += *coef * feature;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chacha;
    use chrono::{TimeZone, Utc};
    use rand::Rng;
    use std::sync::Arc;

    fn window_from_states(states: Vec<[f64; 4]>, target: f64) -> WindowSample<f64> {
        WindowSample {
            states,
            target,
            turbine_id: Arc::from("T00"),
            timestamp: Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    fn random_window(rng: &mut impl Rng, lags: usize) -> WindowSample<f64> {
        let states = (0..=lags)
            .map(|_| {
                [
                    rng.gen_range(-10.0..30.0),
                    rng.gen_range(0.0..3.0),
                    rng.gen_range(0.0..900.0),
                    rng.gen_range(10.0..80.0),
                ]
            })
            .collect();
        window_from_states(states, rng.gen_range(10.0..80.0))
    }

    #[test]
    fn equal_ambient_and_bearing_zeroes_first_column() {
        let states = (0..6).map(|k| [20.0 + k as f64, 1.5, 300.0, 20.0 + k as f64]).collect();
        let w = window_from_states(states, 25.0);
        let feats = linear_features(&w);
        for k in 0..6 {
            assert_eq!(feats[k * 3], 0.0);
        }
    }

    #[test]
    fn idle_turbine_zeroes_speed_and_power_columns() {
        let states = (0..6).map(|k| [5.0 + k as f64, 0.0, 0.0, 30.0]).collect();
        let w = window_from_states(states, 29.0);
        let feats = linear_features(&w);
        for k in 0..6 {
            assert_eq!(feats[k * 3 + 1], 0.0);
            assert_eq!(feats[k * 3 + 2], 0.0);
        }
    }

    #[test]
    fn feature_rows_follow_lag_order() {
        // Hand-built window: state s has ambient 10+s, rotor s, power 100s,
        // prev bearing 40-s. Lag k reads state (lags － k).
        let states: Vec<[f64; 4]> =
            (0..6).map(|s| [10.0 + s as f64, s as f64, 100.0 * s as f64, 40.0 - s as f64]).collect();
        let w = window_from_states(states, 50.0);
        let feats = linear_features(&w);
        for k in 0..6usize {
            let s = (5 - k) as f64;
            assert_eq!(feats[k * 3], (10.0 + s) - (40.0 - s), "lag {k} diff");
            assert_eq!(feats[k * 3 + 1], s, "lag {k} rotor");
            assert_eq!(feats[k * 3 + 2], 100.0 * s, "lag {k} power");
        }
    }

    #[test]
    fn recovers_exact_generating_parameters() {
        let mut rng = chacha(2);
        let lags = 5;
        let intercept = 7.5;
        let coefs: Vec<f64> = (0..18).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let windows: Vec<WindowSample<f64>> = (0..200)
            .map(|_| {
                let mut w = random_window(&mut rng, lags);
                let feats = linear_features(&w);
                w.target = intercept + feats.iter().zip(&coefs).map(|(f, c)| f * c).sum::<f64>();
                w
            })
            .collect();
        let fit = fit_linear(&windows, lags).unwrap();
        assert!(!fit.rank_deficient());
        assert!((fit.model.intercept - intercept).abs() < 1e-8);
        for (got, want) in fit.model.coefficients.iter().zip(&coefs) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn constant_target_zero_features_is_pure_intercept() {
        let windows: Vec<WindowSample<f64>> = (0..40)
            .map(|_| window_from_states(vec![[5.0, 0.0, 0.0, 5.0]; 6], 42.0))
            .collect();
        let fit = fit_linear(&windows, 5).unwrap();
        assert!(fit.rank_deficient());
        assert!((fit.model.intercept - 42.0).abs() < 1e-10);
        for c in &fit.model.coefficients {
            assert!(c.abs() < 1e-10, "minimum-norm coefficient {c}");
        }
    }

    #[test]
    fn fitted_model_beats_random_perturbations() {
        let mut rng = chacha(14);
        let lags = 5;
        let windows: Vec<WindowSample<f64>> = (0..300)
            .map(|_| {
                let mut w = random_window(&mut rng, lags);
                let feats = linear_features(&w);
                w.target = 20.0 + 0.3 * feats[0] + 0.01 * feats[2] + rng.gen_range(-1.0..1.0);
                w
            })
            .collect();
        let fit = fit_linear(&windows, lags).unwrap();
        let rss = |m: &LinearModel<f64>| -> f64 {
            windows.iter().map(|w| (linear_predict(m, w).unwrap() - w.target).powi(2)).sum()
        };
        let base = rss(&fit.model);
        for _ in 0..1000 {
            let mut perturbed = fit.model.clone();
            perturbed.intercept *= 1.0 + rng.gen_range(-1e-3..1e-3);
            for c in perturbed.coefficients.iter_mut() {
                *c *= 1.0 + rng.gen_range(-1e-3..1e-3);
            }
            assert!(rss(&perturbed) >= base - base * 1e-12);
        }
    }

    #[test]
    fn nests_the_discrete_dynamics_under_constant_ambient() {
        // With constant ambient and zero noise the generating recursion
        // collapses to an exact linear function of the lag-0 features:
        // target = ambient + (l1 - 1) d_0 + l2 w_0 + l3 P_0. The fit must
        // recover it to numerical precision.
        use crate::sim::{generate_plant, preset, GenerateOptions};
        use chrono::TimeZone;
        let mut model = preset::<f64>("A").unwrap();
        model.physics.temp_noise_std = 0.0;
        model.physics.sensor_noise_std = 0.0;
        model.ambient.noise_std = 0.0;
        model.ambient.diurnal_amplitude = 0.0;
        model.ambient.seasonal_amplitude = 0.0;
        let opts = GenerateOptions {
            plant_id: "A".into(),
            n_turbines: 1,
            steps: 2000,
            start: chrono::Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(),
            seed: 9,
        };
        let (dataset, _) = generate_plant(&model, &opts).unwrap();
        let (windows, _) = crate::data::build_windows(&dataset.turbines["T00"], 5);
        let fit = fit_linear(&windows, 5).unwrap();
        let mse: f64 = windows
            .iter()
            .map(|w| (linear_predict(&fit.model, w).unwrap() - w.target).powi(2))
            .sum::<f64>()
            / windows.len() as f64;
        assert!(mse.sqrt() < 0.05, "in-sample RMSE {}", mse.sqrt());
    }

    #[test]
    fn too_few_windows_is_an_error() {
        let mut rng = chacha(3);
        let windows: Vec<WindowSample<f64>> = (0..18).map(|_| random_window(&mut rng, 5)).collect();
        assert!(matches!(
            fit_linear(&windows, 5),
            Err(ModelError::NotEnoughWindows { needed: 19, got: 18 })
        ));
    }

    #[test]
    fn predict_with_zero_coefficients_returns_intercept() {
        let model = LinearModel { intercept: 33.0, coefficients: vec![0.0; 18], lags: 5 };
        let mut rng = chacha(4);
        let w = random_window(&mut rng, 5);
        assert_eq!(linear_predict(&model, &w).unwrap(), 33.0);
    }

    #[test]
    fn one_hot_coefficient_selects_single_feature() {
        let mut coefficients = vec![0.0; 18];
        coefficients[4] = 1.0; // lag 1, rotor speed
        let model = LinearModel { intercept: 2.0, coefficients, lags: 5 };
        let mut rng = chacha(5);
        let w = random_window(&mut rng, 5);
        let expect = 2.0 + linear_features(&w)[4];
        assert!((linear_predict(&model, &w).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn predict_matches_double_loop_evaluation() {
        let mut rng = chacha(6);
        let coefficients: Vec<f64> = (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = LinearModel { intercept: rng.gen_range(-5.0..5.0), coefficients, lags: 5 };
        let w = random_window(&mut rng, 5);
        let feats = linear_features(&w);
        let mut expect = model.intercept;
        for lag in 0..6 {
            for f in 0..3 {
                expect += model.coefficient(lag, f) * feats[lag * 3 + f];
            }
        }
        assert!((linear_predict(&model, &w).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn lag_mismatch_is_rejected() {
        let model = LinearModel { intercept: 0.0, coefficients: vec![0.0; 18], lags: 5 };
        let mut rng = chacha(7);
        let w = random_window(&mut rng, 3);
        assert!(matches!(linear_predict(&model, &w), Err(ModelError::LagMismatch { .. })));
    }
}
