//! Shipped plant presets.
//!
//! Three plants with different wind climates and thermal coefficients, all
//! rated 850 kW. Coefficients are chosen so the noise-free steady state at
//! rated power sits 20-40 degC over ambient and the Euler stability ratio
//! dt/(C*R) stays well below 1 even after the per-turbine +-10% jitter.

use crate::num::{real, Real};

use super::{AmbientModel, PlantModel, PlantPhysicsConfig, PowerCurve, WindModelConfig};

/// Names of the shipped presets.
pub fn preset_names() -> &'static [&'static str] {
    &["A", "B", "C"]
}

/// Looks up a shipped preset by name.
pub fn preset<S: Real>(name: &str) -> Option<PlantModel<S>> {
    let model = match name {
        // Baseline site.
        "A" => PlantModel {
            physics: physics(1.5e6, 5.5e-3, 1200.0, 0.0025),
            wind: wind(7.5, 1.4e-4, 0.037),
            ambient: ambient(9.0, 2.5, 4.0, 0.3),
            curve: curve(12.0),
        },
        // Windier coastal site, heavier drivetrain.
        "B" => PlantModel {
            physics: physics(1.7e6, 5.0e-3, 1350.0, 0.0022),
            wind: wind(9.0, 1.2e-4, 0.040),
            ambient: ambient(11.0, 2.0, 3.5, 0.3),
            curve: curve(11.5),
        },
        // Calmer inland site, lighter drivetrain.
        "C" => PlantModel {
            physics: physics(1.35e6, 6.0e-3, 1050.0, 0.0028),
            wind: wind(6.5, 1.6e-4, 0.034),
            ambient: ambient(7.0, 3.0, 4.5, 0.3),
            curve: curve(12.5),
        },
        _ => return None,
    };
    Some(model)
}

fn physics<S: Real>(c: f64, r: f64, mu: f64, alpha: f64) -> PlantPhysicsConfig<S> {
    PlantPhysicsConfig {
        heat_capacity: real(c),
        thermal_resistance: real(r),
        friction_coeff: real(mu),
        power_heat_fraction: real(alpha),
        dt_seconds: real(600.0),
        temp_noise_std: real(0.08),
        sensor_noise_std: real(0.35),
    }
}

fn wind<S: Real>(mean: f64, reversion: f64, vol: f64) -> WindModelConfig<S> {
    WindModelConfig { mean_speed: real(mean), reversion_rate: real(reversion), volatility: real(vol) }
}

fn ambient<S: Real>(mean: f64, diurnal: f64, seasonal: f64, noise: f64) -> AmbientModel<S> {
    AmbientModel {
        mean_temp: real(mean),
        diurnal_amplitude: real(diurnal),
        seasonal_amplitude: real(seasonal),
        noise_std: real(noise),
    }
}

fn curve<S: Real>(rated: f64) -> PowerCurve<S> {
    PowerCurve {
        nominal_power: real(850.0),
        nominal_rotor_speed: real(2.7),
        cut_in: real(3.0),
        rated: real(rated),
        cut_out: real(25.0),
    }
}
