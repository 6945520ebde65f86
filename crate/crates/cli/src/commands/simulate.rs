//! `pcrnn simulate`: one CSV per plant preset plus `ground_truth.json`
//! recording the true per-turbine coefficients, noise seeds, and fault
//! schedules.

use std::path::Path;

use serde::Serialize;

use pcrnn_core::data::write_scada_csv;
use pcrnn_core::rng::derive_seed;
use pcrnn_core::sim::{generate_plant, inject_fault, preset, GenerateOptions};
use pcrnn_core::FaultProfile;

use crate::config::{parse_rfc3339, LoadedConfig};
use crate::CliError;

const STEPS_PER_DAY: f64 = 144.0;
/// Stream tag separating per-plant seeds from everything else.
const PLANT_SEED_BASE: u64 = 1000;

#[derive(Serialize)]
struct GroundTruthFile {
    plants: Vec<PlantTruth>,
}

#[derive(Serialize)]
struct PlantTruth {
    plant_id: String,
    seed: u64,
    turbines: Vec<TurbineTruth>,
}

#[derive(Serialize)]
struct TurbineTruth {
    turbine_id: String,
    heat_capacity: f64,
    thermal_resistance: f64,
    friction_coeff: f64,
    power_heat_fraction: f64,
    noise_seed: u64,
    fault: Option<FaultTruth>,
}

#[derive(Serialize)]
struct FaultTruth {
    onset: String,
    mu_multiplier: f64,
    ramp_seconds: f64,
}

pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config.simulate;
    let start = parse_rfc3339(&cfg.start, "simulate.start")?;
    let steps = (cfg.duration_days * STEPS_PER_DAY).round() as usize;

    let mut truths = Vec::new();
    for (index, name) in cfg.plants.iter().enumerate() {
        let model = preset::<f64>(name).ok_or_else(|| {
            CliError::Usage(format!(
                "config key `simulate.plants`: unknown preset `{name}` (shipped: A, B, C)"
            ))
        })?;
        let opts = GenerateOptions {
            plant_id: name.clone(),
            n_turbines: cfg.n_turbines,
            steps,
            start,
            seed: derive_seed(loaded.config.seed, PLANT_SEED_BASE + index as u64),
        };
        let (mut dataset, mut truth) = generate_plant(&model, &opts).map_err(CliError::runtime)?;

        for fault in cfg.faults.iter().filter(|f| &f.plant == name) {
            let onset = parse_rfc3339(&fault.onset, "simulate.faults.onset")?;
            let profile = FaultProfile {
                onset,
                mu_multiplier: fault.mu_multiplier,
                ramp_duration: fault.ramp_days * 86_400.0,
            };
            let turbine = truth
                .turbines
                .iter_mut()
                .find(|t| t.turbine_id == fault.turbine)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "config key `simulate.faults`: turbine `{}` not in plant `{name}`",
                        fault.turbine
                    ))
                })?;
            let series = dataset.turbines.get(&fault.turbine).expect("truth and data agree");
            let faulted = inject_fault(series, &turbine.physics, &profile, turbine.noise_seed)
                .map_err(CliError::runtime)?;
            dataset.turbines.insert(fault.turbine.clone(), faulted);
            turbine.fault = Some(profile.clone());
        }

        let path = out_dir.join(format!("plant_{name}.csv"));
        let file = std::fs::File::create(&path)
            .map_err(|e| CliError::Runtime(format!("cannot create `{}`: {e}", path.display())))?;
        write_scada_csv(&dataset, std::io::BufWriter::new(file)).map_err(CliError::runtime)?;
        println!(
            "plant {name}: {} turbines, {} records -> {}",
            dataset.turbines.len(),
            dataset.record_count(),
            path.display()
        );

        truths.push(PlantTruth {
            plant_id: name.clone(),
            seed: truth.seed,
            turbines: truth
                .turbines
                .iter()
                .map(|t| TurbineTruth {
                    turbine_id: t.turbine_id.clone(),
                    heat_capacity: t.physics.heat_capacity,
                    thermal_resistance: t.physics.thermal_resistance,
                    friction_coeff: t.physics.friction_coeff,
                    power_heat_fraction: t.physics.power_heat_fraction,
                    noise_seed: t.noise_seed,
                    fault: t.fault.as_ref().map(|f| FaultTruth {
                        onset: f.onset.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                        mu_multiplier: f.mu_multiplier,
                        ramp_seconds: f.ramp_duration,
                    }),
                })
                .collect(),
        });
    }

    let sidecar = out_dir.join("ground_truth.json");
    let json = serde_json::to_string_pretty(&GroundTruthFile { plants: truths })
        .map_err(|e| CliError::Runtime(format!("cannot serialize ground truth: {e}")))?;
    std::fs::write(&sidecar, json)
        .map_err(|e| CliError::Runtime(format!("cannot write `{}`: {e}", sidecar.display())))?;
    Ok(())
}
