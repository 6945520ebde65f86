//! Synthetic plant generator: the verification oracle for everything else.
//!
//! Bearing temperature follows a lumped heat-transfer balance, integrated
//! with explicit Euler on the 10-minute grid. Per step,
//!
//! ```text
//! T' = T + (dt / C) * [ (ambient - T) / R  +  mu * omega  +  a * P_W ]
//! ```
//!
//! with heat capacity `C` (J/K), thermal resistance `R` (K/W), friction
//! heating coefficient `mu`, heat-per-power fraction `a`, and power converted
//! kW -> W inside the integrator. Inputs are taken at the step being entered:
//! the transition into time `t` uses `(ambient_t, omega_t, power_t)`.
//!
//! Explicit Euler is stable here only while `dt / (C * R) < 1`; the
//! generator rejects configurations that violate the bound.

mod presets;

pub use presets::{preset, preset_names};

use chrono::{DateTime, Datelike, Timelike, Utc};
use thiserror::Error;

use crate::data::{PlantDataset, ScadaRecord, TurbineSeries, GRID_SECONDS};
use crate::num::{real, Real};
use crate::rng::{chacha, derive_seed, Gaussian};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid physics config: {0}")]
    InvalidConfig(String),
    #[error("Euler step is unstable: dt/(C*R) = {ratio} must be < 1")]
    UnstableConfig { ratio: f64 },
    #[error("duration of {steps} steps is too short, need at least {min}")]
    InvalidDuration { steps: usize, min: usize },
    #[error("fault onset {onset} is outside the series range")]
    OnsetOutOfRange { onset: DateTime<Utc> },
    #[error("series has gaps; fault injection requires a contiguous series")]
    NonContiguousSeries,
}

/// Ground-truth thermal coefficients; used only by the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantPhysicsConfig<S> {
    /// Effective heat capacity of the bearing node, J/K.
    pub heat_capacity: S,
    /// Thermal resistance toward ambient, K/W.
    pub thermal_resistance: S,
    /// Friction heating per unit rotor speed.
    pub friction_coeff: S,
    /// Fraction of produced power degraded to heat, dimensionless.
    pub power_heat_fraction: S,
    /// Grid step, seconds.
    pub dt_seconds: S,
    /// Process noise on the integrated temperature, degC per step.
    pub temp_noise_std: S,
    /// Additive measurement noise on the reported bearing temperature, degC.
    pub sensor_noise_std: S,
}

impl<S: Real> PlantPhysicsConfig<S> {
    /// `dt / (C * R)`, the explicit-Euler stability ratio.
    pub fn euler_ratio(&self) -> S {
        self.dt_seconds / (self.heat_capacity * self.thermal_resistance)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.heat_capacity > S::zero()) {
            return Err(SimError::InvalidConfig("heat_capacity must be > 0".into()));
        }
        if !(self.thermal_resistance > S::zero()) {
            return Err(SimError::InvalidConfig("thermal_resistance must be > 0".into()));
        }
        if self.friction_coeff < S::zero() {
            return Err(SimError::InvalidConfig("friction_coeff must be >= 0".into()));
        }
        if self.power_heat_fraction < S::zero() || self.power_heat_fraction >= S::one() {
            return Err(SimError::InvalidConfig("power_heat_fraction must be in [0, 1)".into()));
        }
        if !(self.dt_seconds > S::zero()) {
            return Err(SimError::InvalidConfig("dt_seconds must be > 0".into()));
        }
        if self.temp_noise_std < S::zero() || self.sensor_noise_std < S::zero() {
            return Err(SimError::InvalidConfig("noise levels must be >= 0".into()));
        }
        let ratio = self.euler_ratio();
        if ratio >= S::one() {
            return Err(SimError::UnstableConfig { ratio: ratio.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(())
    }
}

/// One explicit-Euler step of the bearing-temperature balance.
///
/// `noise` is the realized process disturbance for this step (pass zero for
/// the deterministic path). No stability clamp is applied here; validity of
/// the configuration is the generator's job.
pub fn step_bearing_temp<S: Real>(
    bearing_temp: S,
    ambient_temp: S,
    rotor_speed: S,
    power_kw: S,
    cfg: &PlantPhysicsConfig<S>,
    noise: S,
) -> S {
    let heat_in = (ambient_temp - bearing_temp) / cfg.thermal_resistance
        + cfg.friction_coeff * rotor_speed
        + cfg.power_heat_fraction * power_kw * real(1000.0);
    bearing_temp + cfg.dt_seconds / cfg.heat_capacity * heat_in + noise
}

/// Noise-free steady state under constant inputs.
pub fn fixed_point_temp<S: Real>(
    ambient_temp: S,
    rotor_speed: S,
    power_kw: S,
    cfg: &PlantPhysicsConfig<S>,
) -> S {
    ambient_temp
        + cfg.thermal_resistance
            * (cfg.friction_coeff * rotor_speed + cfg.power_heat_fraction * power_kw * real(1000.0))
}

/// Mean-reverting wind model (Ornstein-Uhlenbeck), rates per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindModelConfig<S> {
    /// Long-run mean wind speed, m/s.
    pub mean_speed: S,
    /// Mean-reversion rate, 1/s.
    pub reversion_rate: S,
    /// Instantaneous volatility, m s^-1 s^-1/2.
    pub volatility: S,
}

impl<S: Real> WindModelConfig<S> {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.mean_speed > S::zero()) || self.reversion_rate < S::zero() || self.volatility < S::zero() {
            return Err(SimError::InvalidConfig("wind model parameters out of range".into()));
        }
        Ok(())
    }
}

/// Euler-Maruyama path of the wind model, clamped at zero.
///
/// The path starts in the stationary state (one draw from
/// `N(mean, vol^2 / 2k)`, or exactly at the mean when `k = 0`) so series
/// carry no artificial spin-up transient, then advances by
/// `x += k (mean - x) dt + vol sqrt(dt) z`.
pub fn simulate_wind<S: Real>(
    cfg: &WindModelConfig<S>,
    steps: usize,
    dt_seconds: S,
    seed: u64,
) -> Vec<S> {
    let mut gauss = Gaussian::new(seed);
    let sqrt_dt = dt_seconds.sqrt();
    let stationary_std = if cfg.reversion_rate > S::zero() {
        cfg.volatility / (real::<S>(2.0) * cfg.reversion_rate).sqrt()
    } else {
        S::zero()
    };
    let z0: S = gauss.next();
    let mut x = (cfg.mean_speed + stationary_std * z0).max(S::zero());
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push(x);
        let z: S = gauss.next();
        x = x + cfg.reversion_rate * (cfg.mean_speed - x) * dt_seconds
            + cfg.volatility * sqrt_dt * z;
        x = x.max(S::zero());
    }
    out
}

/// Piecewise wind -> (rotor speed, power) map.
///
/// With `u = (v - cut_in) / (rated - cut_in)`:
///
/// ```text
/// v < cut_in or v > cut_out:  (0, 0)
/// cut_in <= v < rated:        omega = nominal_rotor_speed * (0.5 + 0.5 u)
///                             P     = nominal_power * (v^3 - cut_in^3) / (rated^3 - cut_in^3)
/// rated <= v <= cut_out:      (nominal_rotor_speed, nominal_power)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCurve<S> {
    /// Rated power, kW.
    pub nominal_power: S,
    /// Rotor speed at/above rated wind, rad/s.
    pub nominal_rotor_speed: S,
    pub cut_in: S,
    pub rated: S,
    pub cut_out: S,
}

impl<S: Real> PowerCurve<S> {
    pub fn validate(&self) -> Result<(), SimError> {
        let ordered = S::zero() < self.cut_in && self.cut_in < self.rated && self.rated < self.cut_out;
        if !ordered || !(self.nominal_power > S::zero()) || !(self.nominal_rotor_speed > S::zero()) {
            return Err(SimError::InvalidConfig("power curve parameters out of range".into()));
        }
        Ok(())
    }
}

/// Evaluates the documented piecewise curve.
pub fn operating_point<S: Real>(wind: S, curve: &PowerCurve<S>) -> (S, S) {
    if wind < curve.cut_in || wind > curve.cut_out {
        return (S::zero(), S::zero());
    }
    if wind >= curve.rated {
        return (curve.nominal_rotor_speed, curve.nominal_power);
    }
    let half = real::<S>(0.5);
    let u = (wind - curve.cut_in) / (curve.rated - curve.cut_in);
    let omega = curve.nominal_rotor_speed * (half + half * u);
    let cube = |x: S| x * x * x;
    let power = curve.nominal_power * (cube(wind) - cube(curve.cut_in))
        / (cube(curve.rated) - cube(curve.cut_in));
    (omega, power)
}

/// Curtailment hook: caps power at `fraction * nominal_power` and scales the
/// rotor speed proportionally when the cap binds.
pub fn operating_point_curtailed<S: Real>(
    wind: S,
    curve: &PowerCurve<S>,
    fraction: S,
) -> (S, S) {
    let (omega, power) = operating_point(wind, curve);
    let cap = fraction * curve.nominal_power;
    if power > cap && power > S::zero() {
        let scale = cap / power;
        (omega * scale, cap)
    } else {
        (omega, power)
    }
}

/// Deterministic ambient temperature: diurnal + seasonal harmonics around a
/// mean, plus i.i.d. noise shared by all turbines of the plant.
///
/// The diurnal term peaks at 16:00 and bottoms at 04:00; the seasonal term
/// peaks around day 201 of the year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientModel<S> {
    pub mean_temp: S,
    pub diurnal_amplitude: S,
    pub seasonal_amplitude: S,
    pub noise_std: S,
}

impl<S: Real> AmbientModel<S> {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.diurnal_amplitude < S::zero()
            || self.seasonal_amplitude < S::zero()
            || self.noise_std < S::zero()
        {
            return Err(SimError::InvalidConfig("ambient amplitudes must be >= 0".into()));
        }
        Ok(())
    }

    pub fn temperature_at(&self, t: DateTime<Utc>, noise: S) -> S {
        let tau = real::<S>(std::f64::consts::TAU);
        let hour = real::<S>(
            t.time().num_seconds_from_midnight() as f64 / 3600.0,
        );
        let day = real::<S>(t.ordinal0() as f64);
        let diurnal = self.diurnal_amplitude
            * (tau * (hour - real(10.0)) / real(24.0)).sin();
        let seasonal = self.seasonal_amplitude
            * (tau * (day - real(110.0)) / real(365.25)).sin();
        self.mean_temp + diurnal + seasonal + noise
    }
}

/// A bearing fault: the friction coefficient ramps linearly from 1x at
/// `onset` to `mu_multiplier` at `onset + ramp_duration` and stays there.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultProfile<S> {
    pub onset: DateTime<Utc>,
    pub mu_multiplier: S,
    /// Ramp length, seconds.
    pub ramp_duration: S,
}

impl<S: Real> FaultProfile<S> {
    pub fn multiplier_at(&self, t: DateTime<Utc>) -> S {
        if t < self.onset {
            return S::one();
        }
        let elapsed = real::<S>((t - self.onset).num_seconds() as f64);
        if self.ramp_duration <= S::zero() || elapsed >= self.ramp_duration {
            self.mu_multiplier
        } else {
            S::one() + (self.mu_multiplier - S::one()) * elapsed / self.ramp_duration
        }
    }
}

/// Everything that defines a plant's data-generating process.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel<S> {
    pub physics: PlantPhysicsConfig<S>,
    pub wind: WindModelConfig<S>,
    pub ambient: AmbientModel<S>,
    pub curve: PowerCurve<S>,
}

/// Run options for [`generate_plant`].
#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub plant_id: String,
    pub n_turbines: usize,
    /// Number of grid steps per turbine.
    pub steps: usize,
    pub start: DateTime<Utc>,
    pub seed: u64,
}

/// Per-turbine ground truth recorded alongside generated data.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbineTruth<S> {
    pub turbine_id: String,
    /// Coefficients after the per-turbine +-10% jitter.
    pub physics: PlantPhysicsConfig<S>,
    /// Seed of the turbine's noise streams (process = substream 0,
    /// sensor = substream 1).
    pub noise_seed: u64,
    pub fault: Option<FaultProfile<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantGroundTruth<S> {
    pub plant_id: String,
    pub seed: u64,
    pub turbines: Vec<TurbineTruth<S>>,
}

const STREAM_AMBIENT: u64 = 1;
const STREAM_JITTER: u64 = 2;
const STREAM_WIND: u64 = 3;
const STREAM_NOISE: u64 = 4;
const TURBINE_STRIDE: u64 = 16;
/// Shortest duration that still yields a train and a test window at the
/// default lag depth.
const MIN_STEPS: usize = 14;

fn turbine_stream(kind: u64, index: usize) -> u64 {
    kind + TURBINE_STRIDE * (index as u64 + 1)
}

/// Generates one plant: shared ambient, independent per-turbine wind and
/// noise streams, and per-turbine thermal coefficients jittered +-10% so
/// the fleet is heterogeneous. Fully deterministic per seed.
///
/// The first bearing temperature is the fixed point of the initial operating
/// point, so turbines start thermally settled.
pub fn generate_plant<S: Real>(
    model: &PlantModel<S>,
    opts: &GenerateOptions,
) -> Result<(PlantDataset<S>, PlantGroundTruth<S>), SimError> {
    model.physics.validate()?;
    model.wind.validate()?;
    model.curve.validate()?;
    model.ambient.validate()?;
    if opts.steps < MIN_STEPS {
        return Err(SimError::InvalidDuration { steps: opts.steps, min: MIN_STEPS });
    }

    let dt = model.physics.dt_seconds;
    let timestamps: Vec<DateTime<Utc>> = (0..opts.steps)
        .map(|k| opts.start + chrono::Duration::seconds(GRID_SECONDS * k as i64))
        .collect();

    // Ambient is plant-wide: one stream regardless of turbine count.
    let mut ambient_gauss = Gaussian::new(derive_seed(opts.seed, STREAM_AMBIENT));
    let ambient: Vec<S> = timestamps
        .iter()
        .map(|&t| {
            let z: S = ambient_gauss.next();
            model.ambient.temperature_at(t, z * model.ambient.noise_std)
        })
        .collect();

    let mut dataset = PlantDataset::new(opts.plant_id.clone(), model.curve.nominal_power);
    let mut truths = Vec::with_capacity(opts.n_turbines);

    for i in 0..opts.n_turbines {
        let turbine_id = format!("T{i:02}");
        let physics = jitter_physics(&model.physics, derive_seed(opts.seed, turbine_stream(STREAM_JITTER, i)));
        physics.validate()?;
        let wind = simulate_wind(
            &model.wind,
            opts.steps,
            dt,
            derive_seed(opts.seed, turbine_stream(STREAM_WIND, i)),
        );
        let noise_seed = derive_seed(opts.seed, turbine_stream(STREAM_NOISE, i));

        let ops: Vec<(S, S)> = wind.iter().map(|&v| operating_point(v, &model.curve)).collect();
        let records = integrate_series(&timestamps, &ambient, &ops, &physics, None, noise_seed);

        dataset
            .turbines
            .insert(turbine_id.clone(), TurbineSeries { turbine_id: turbine_id.clone(), records });
        truths.push(TurbineTruth { turbine_id, physics, noise_seed, fault: None });
    }

    Ok((dataset, PlantGroundTruth { plant_id: opts.plant_id.clone(), seed: opts.seed, turbines: truths }))
}

fn jitter_physics<S: Real>(base: &PlantPhysicsConfig<S>, seed: u64) -> PlantPhysicsConfig<S> {
    let mut rng = chacha(seed);
    use rand::Rng;
    let mut factor = || real::<S>(rng.gen_range(0.9..1.1));
    PlantPhysicsConfig {
        heat_capacity: base.heat_capacity * factor(),
        thermal_resistance: base.thermal_resistance * factor(),
        friction_coeff: base.friction_coeff * factor(),
        power_heat_fraction: base.power_heat_fraction * factor(),
        ..*base
    }
}

/// Integrates the bearing temperature over given inputs and noise streams.
///
/// This is the single integration path shared by generation and fault
/// injection: same streams, same draw order, bit-identical results.
fn integrate_series<S: Real>(
    timestamps: &[DateTime<Utc>],
    ambient: &[S],
    ops: &[(S, S)],
    physics: &PlantPhysicsConfig<S>,
    fault: Option<&FaultProfile<S>>,
    noise_seed: u64,
) -> Vec<ScadaRecord<S>> {
    let mut process = Gaussian::new(derive_seed(noise_seed, 0));
    let mut sensor = Gaussian::new(derive_seed(noise_seed, 1));
    let mut records = Vec::with_capacity(timestamps.len());
    let mut truth = S::zero();
    for k in 0..timestamps.len() {
        let (omega, power) = ops[k];
        let cfg = match fault {
            Some(f) => PlantPhysicsConfig {
                friction_coeff: physics.friction_coeff * f.multiplier_at(timestamps[k]),
                ..*physics
            },
            None => *physics,
        };
        if k == 0 {
            truth = fixed_point_temp(ambient[0], omega, power, &cfg);
        } else {
            let z: S = process.next();
            truth = step_bearing_temp(truth, ambient[k], omega, power, &cfg, z * physics.temp_noise_std);
        }
        let z: S = sensor.next();
        records.push(ScadaRecord {
            timestamp: timestamps[k],
            ambient_temp: ambient[k],
            rotor_speed: omega,
            power,
            bearing_temp: truth + z * physics.sensor_noise_std,
        });
    }
    records
}

/// Re-integrates a turbine's bearing temperature with a friction fault.
///
/// Inputs (ambient, rotor speed, power) are untouched; the bearing
/// temperature stream is regenerated from the turbine's recorded noise seed,
/// so a multiplier of 1 reproduces the input series exactly and everything
/// before the onset is bitwise unchanged.
pub fn inject_fault<S: Real>(
    series: &TurbineSeries<S>,
    physics: &PlantPhysicsConfig<S>,
    fault: &FaultProfile<S>,
    noise_seed: u64,
) -> Result<TurbineSeries<S>, SimError> {
    let records = &series.records;
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Err(SimError::OnsetOutOfRange { onset: fault.onset });
    };
    if fault.onset < first.timestamp || fault.onset > last.timestamp {
        return Err(SimError::OnsetOutOfRange { onset: fault.onset });
    }
    let contiguous = records
        .windows(2)
        .all(|p| (p[1].timestamp - p[0].timestamp).num_seconds() == GRID_SECONDS);
    if !contiguous {
        return Err(SimError::NonContiguousSeries);
    }
    let timestamps: Vec<DateTime<Utc>> = records.iter().map(|r| r.timestamp).collect();
    let ambient: Vec<S> = records.iter().map(|r| r.ambient_temp).collect();
    let ops: Vec<(S, S)> = records.iter().map(|r| (r.rotor_speed, r.power)).collect();
    let new_records = integrate_series(&timestamps, &ambient, &ops, physics, Some(fault), noise_seed);
    Ok(TurbineSeries { turbine_id: series.turbine_id.clone(), records: new_records })
}
