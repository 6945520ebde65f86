//! `pcrnn experiment`: the full sampling/training/evaluation grid, written
//! as `summary.csv` (aggregated) and `repeats.csv` (per repeat).

use std::path::Path;

use pcrnn_core::models::ModelFamily;
use pcrnn_core::train::{run_experiment, write_repeats_csv, write_summary_csv, ExperimentSpec};
use pcrnn_core::PlantDataset;

use crate::config::{parse_rfc3339, LoadedConfig};
use crate::CliError;

use super::load_plant_csv;

pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config.experiment;
    let data_dir = match &cfg.data_dir {
        Some(dir) => loaded.resolve(dir),
        None => out_dir.to_path_buf(),
    };

    let mut datasets: Vec<PlantDataset> = Vec::new();
    for plant in &cfg.plants {
        let path = data_dir.join(format!("plant_{plant}.csv"));
        datasets.push(load_plant_csv(&path)?);
    }

    let models: Vec<ModelFamily> = cfg
        .models
        .iter()
        .map(|m| m.parse().map_err(|e| CliError::Usage(format!("config key `experiment.models`: {e}"))))
        .collect::<Result<_, _>>()?;
    let spec = ExperimentSpec {
        train_plants: cfg.train_plants.clone(),
        n_train: cfg.n_train.clone(),
        repeats: cfg.repeats,
        models,
        boundary: parse_rfc3339(&cfg.split, "experiment.split")?,
        seed: loaded.config.seed,
        hyper: loaded.config.hyperparams.to_hyperparams(loaded.config.seed),
    };

    let report = run_experiment(&spec, &datasets).map_err(CliError::runtime)?;

    let summary_path = out_dir.join("summary.csv");
    let file = std::fs::File::create(&summary_path)
        .map_err(|e| CliError::Runtime(format!("cannot create `{}`: {e}", summary_path.display())))?;
    write_summary_csv(&report, file).map_err(CliError::runtime)?;

    let repeats_path = out_dir.join("repeats.csv");
    let file = std::fs::File::create(&repeats_path)
        .map_err(|e| CliError::Runtime(format!("cannot create `{}`: {e}", repeats_path.display())))?;
    write_repeats_csv(&report, file).map_err(CliError::runtime)?;

    println!(
        "experiment done: {} summary cells, {} repeat rows -> {}",
        report.summary.len(),
        report.repeats.len(),
        summary_path.display()
    );
    Ok(())
}
