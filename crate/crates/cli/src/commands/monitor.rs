//! `pcrnn monitor`: calibrate the alarm threshold on pre-split residuals,
//! scan the post-split period, write `alarms.csv`.

use std::path::Path;

use pcrnn_core::data::{time_split, SplitSpec};
use pcrnn_core::models::load_checkpoint;
use pcrnn_core::monitor::{commissioned_sigma0, detect, residuals, AlarmConfig, AlarmEvent};
use pcrnn_core::TrainedModel;

use crate::config::{parse_rfc3339, LoadedConfig};
use crate::CliError;

use super::{csv_io_err, csv_writer, filter_turbines, load_plant_csv};

pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config.monitor;
    let checkpoint_path = loaded.resolve(loaded.required(&cfg.checkpoint, "monitor.checkpoint")?);
    let data_path = loaded.resolve(loaded.required(&cfg.data, "monitor.data")?);
    let boundary = parse_rfc3339(loaded.required(&cfg.split, "monitor.split")?, "monitor.split")?;

    let model: TrainedModel = load_checkpoint(&checkpoint_path)
        .map_err(|e| CliError::Runtime(format!("checkpoint `{}`: {e}", checkpoint_path.display())))?;
    let mut dataset = load_plant_csv(&data_path)?;
    filter_turbines(&mut dataset, &cfg.turbines)?;
    let (calibration_side, monitored_side) =
        time_split(&dataset, SplitSpec { boundary }).map_err(CliError::runtime)?;

    let path = out_dir.join("alarms.csv");
    let mut csv = csv_writer(&path)?;
    let err = csv_io_err(&path);
    csv.write_record(["turbine_id", "onset", "peak_residual", "duration_steps"]).map_err(&err)?;

    let mut total = 0usize;
    for (id, series) in &monitored_side.turbines {
        let Some(calibration_series) = calibration_side.turbines.get(id) else {
            return Err(CliError::Runtime(format!(
                "turbine `{id}` has no calibration data before {boundary}"
            )));
        };
        // Per-turbine calibration: each bearing gets its own threshold scale.
        let calibration = residuals(&model, calibration_series).map_err(CliError::runtime)?;
        let sigma0 = commissioned_sigma0(&calibration, cfg.ewma_weight, cfg.threshold_sigmas);
        let alarm_config = AlarmConfig {
            ewma_weight: cfg.ewma_weight,
            threshold_sigmas: cfg.threshold_sigmas,
            sigma0,
            min_consecutive: cfg.min_consecutive,
        };
        let monitored = residuals(&model, series).map_err(CliError::runtime)?;
        let events: Vec<AlarmEvent<f64>> =
            detect(&monitored.smoothed(cfg.ewma_weight), &alarm_config).map_err(CliError::runtime)?;
        for event in &events {
            csv.write_record(&[
                id.clone(),
                event.onset.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                format!("{}", event.peak_smoothed),
                event.duration_steps.to_string(),
            ])
            .map_err(&err)?;
        }
        total += events.len();
    }
    csv.flush().map_err(|e| CliError::Runtime(format!("writing `{}`: {e}", path.display())))?;
    println!("{total} alarms -> {}", path.display());
    Ok(())
}
