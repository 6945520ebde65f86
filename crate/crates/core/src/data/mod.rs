//! SCADA-style time series: ingestion, validation, windowing,
//! standardization, and train/test splitting.
//!
//! Measurements live on a fixed 10-minute grid. Gaps are never imputed: they
//! reduce window yield and are reported, because filled-in values would
//! contaminate the physics residual downstream.

mod csv_io;
mod window;

pub use csv_io::{parse_scada_csv, write_scada_csv};
pub use window::{
    apply_standardization, build_windows, destandardize_temperature, fit_standardization,
    invert_standardization, StandardizationStats, WindowSample, FEATURE_COUNT,
};

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::num::Real;
use crate::rng::{chacha, derive_seed};

/// Grid step between consecutive measurements.
pub const GRID_SECONDS: i64 = 600;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing or wrong CSV header, expected `{expected}`")]
    MissingHeader { expected: &'static str },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate timestamp {timestamp} for turbine {turbine}")]
    DuplicateTimestamp { turbine: String, timestamp: DateTime<Utc> },
    #[error("timestamp {timestamp} for turbine {turbine} is not on the 10-minute grid")]
    OffGridTimestamp { turbine: String, timestamp: DateTime<Utc> },
    #[error("feature {feature} has zero variance, cannot standardize")]
    DegenerateFeature { feature: &'static str },
    #[error("cannot fit standardization on an empty window set")]
    EmptyWindowSet,
    #[error("time split leaves the {side} side empty")]
    EmptySide { side: &'static str },
    #[error("requested {requested} turbines but only {available} available")]
    NotEnoughTurbines { requested: usize, available: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One 10-minute averaged measurement row.
///
/// The turbine id lives on the owning [`TurbineSeries`]; records only carry
/// the measured quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScadaRecord<S> {
    pub timestamp: DateTime<Utc>,
    /// Ambient temperature, degC.
    pub ambient_temp: S,
    /// Rotor speed, rad/s. Never negative.
    pub rotor_speed: S,
    /// Produced power, kW. Sensor values in [-1, 0) are clamped to 0.
    pub power: S,
    /// Gearbox bearing temperature, degC.
    pub bearing_temp: S,
}

/// Measurements of one turbine, strictly increasing and grid-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbineSeries<S> {
    pub turbine_id: String,
    pub records: Vec<ScadaRecord<S>>,
}

/// A missing stretch of grid instants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gap {
    pub turbine_id: String,
    /// First missing grid instant.
    pub start: DateTime<Utc>,
    /// Last missing grid instant.
    pub end: DateTime<Utc>,
}

impl<S: Real> TurbineSeries<S> {
    /// Gaps between consecutive records (derived from the timestamps).
    pub fn gaps(&self) -> Vec<Gap> {
        let mut out = Vec::new();
        for pair in self.records.windows(2) {
            let dt = (pair[1].timestamp - pair[0].timestamp).num_seconds();
            if dt > GRID_SECONDS {
                out.push(Gap {
                    turbine_id: self.turbine_id.clone(),
                    start: pair[0].timestamp + chrono::Duration::seconds(GRID_SECONDS),
                    end: pair[1].timestamp - chrono::Duration::seconds(GRID_SECONDS),
                });
            }
        }
        out
    }
}

/// All turbines of one plant on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantDataset<S> {
    pub plant_id: String,
    /// Nominal turbine power, kW.
    pub nominal_power: S,
    pub turbines: BTreeMap<String, TurbineSeries<S>>,
}

impl<S: Real> PlantDataset<S> {
    pub fn new(plant_id: impl Into<String>, nominal_power: S) -> Self {
        PlantDataset { plant_id: plant_id.into(), nominal_power, turbines: BTreeMap::new() }
    }

    pub fn turbine_ids(&self) -> Vec<String> {
        self.turbines.keys().cloned().collect()
    }

    pub fn record_count(&self) -> usize {
        self.turbines.values().map(|t| t.records.len()).sum()
    }
}

/// Time-based split boundary: train is strictly before, test at/after.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub boundary: DateTime<Utc>,
}

/// Splits every turbine series at the boundary.
///
/// Records exactly on the boundary go to the test side. Turbines with no
/// records on a side are dropped from that side; an entirely empty side is
/// an error.
pub fn time_split<S: Real>(
    dataset: &PlantDataset<S>,
    spec: SplitSpec,
) -> Result<(PlantDataset<S>, PlantDataset<S>), DataError> {
    let mut train = PlantDataset::new(dataset.plant_id.clone(), dataset.nominal_power);
    let mut test = PlantDataset::new(dataset.plant_id.clone(), dataset.nominal_power);
    for (id, series) in &dataset.turbines {
        let cut = series.records.partition_point(|r| r.timestamp < spec.boundary);
        if cut > 0 {
            train.turbines.insert(
                id.clone(),
                TurbineSeries { turbine_id: id.clone(), records: series.records[..cut].to_vec() },
            );
        }
        if cut < series.records.len() {
            test.turbines.insert(
                id.clone(),
                TurbineSeries { turbine_id: id.clone(), records: series.records[cut..].to_vec() },
            );
        }
    }
    if train.record_count() == 0 {
        return Err(DataError::EmptySide { side: "train" });
    }
    if test.record_count() == 0 {
        return Err(DataError::EmptySide { side: "test" });
    }
    Ok((train, test))
}

/// Samples `n` turbines without replacement, deterministically per seed.
///
/// Returns `(selected, held_out)`; the union is the full dataset and the
/// intersection is empty.
pub fn sample_turbines<S: Real>(
    dataset: &PlantDataset<S>,
    n: usize,
    seed: u64,
) -> Result<(PlantDataset<S>, PlantDataset<S>), DataError> {
    let ids = dataset.turbine_ids();
    if n == 0 || n > ids.len() {
        return Err(DataError::NotEnoughTurbines { requested: n, available: ids.len() });
    }
    let mut rng = chacha(derive_seed(seed, 0x5A4D));
    let picked = rand::seq::index::sample(&mut rng, ids.len(), n);
    let mut selected_ids: Vec<&String> = picked.iter().map(|i| &ids[i]).collect();
    selected_ids.sort();

    let mut selected = PlantDataset::new(dataset.plant_id.clone(), dataset.nominal_power);
    let mut held_out = PlantDataset::new(dataset.plant_id.clone(), dataset.nominal_power);
    for (id, series) in &dataset.turbines {
        let target = if selected_ids.binary_search(&id).is_ok() { &mut selected } else { &mut held_out };
        target.turbines.insert(id.clone(), series.clone());
    }
    Ok((selected, held_out))
}
