//! `pcrnn evaluate`: RMSE of a checkpoint on a data CSV, per turbine and
//! pooled.

use std::path::Path;

use pcrnn_core::data::{build_windows, time_split, SplitSpec};
use pcrnn_core::metrics::{gradient_sign_agreement, rmse};
use pcrnn_core::models::load_checkpoint;
use pcrnn_core::TrainedModel;

use crate::config::{parse_rfc3339, LoadedConfig};
use crate::CliError;

use super::{csv_io_err, csv_writer, filter_turbines, load_plant_csv};

pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config.evaluate;
    let checkpoint_path = loaded.resolve(loaded.required(&cfg.checkpoint, "evaluate.checkpoint")?);
    let data_path = loaded.resolve(loaded.required(&cfg.data, "evaluate.data")?);

    let model: TrainedModel = load_checkpoint(&checkpoint_path)
        .map_err(|e| CliError::Runtime(format!("checkpoint `{}`: {e}", checkpoint_path.display())))?;
    let mut dataset = load_plant_csv(&data_path)?;
    filter_turbines(&mut dataset, &cfg.turbines)?;
    if let Some(split) = &cfg.split {
        let boundary = parse_rfc3339(split, "evaluate.split")?;
        let (_, test_side) =
            time_split(&dataset, SplitSpec { boundary }).map_err(CliError::runtime)?;
        dataset = test_side;
    }

    let path = out_dir.join("eval.csv");
    let mut csv = csv_writer(&path)?;
    let err = csv_io_err(&path);
    csv.write_record(["turbine_id", "windows", "rmse"]).map_err(&err)?;

    let mut all_preds = Vec::new();
    let mut all_targets = Vec::new();
    let mut all_windows = Vec::new();
    for (id, series) in &dataset.turbines {
        let (windows, _) = build_windows(series, model.lags());
        if windows.is_empty() {
            continue;
        }
        let mut preds = Vec::with_capacity(windows.len());
        let mut targets = Vec::with_capacity(windows.len());
        for window in &windows {
            preds.push(model.nowcast(window).map_err(CliError::runtime)?);
            targets.push(window.target);
        }
        let value = rmse(&preds, &targets).map_err(CliError::runtime)?;
        csv.write_record(&[id.clone(), windows.len().to_string(), format!("{value}")])
            .map_err(&err)?;
        all_preds.extend(preds);
        all_targets.extend(targets);
        all_windows.extend(windows);
    }
    let pooled = rmse(&all_preds, &all_targets)
        .map_err(|e| CliError::Runtime(format!("no evaluable windows: {e}")))?;
    csv.write_record(&["ALL".to_string(), all_preds.len().to_string(), format!("{pooled}")])
        .map_err(&err)?;
    csv.flush().map_err(|e| CliError::Runtime(format!("writing `{}`: {e}", path.display())))?;

    println!("pooled rmse over {} windows: {pooled:.4} degC -> {}", all_preds.len(), path.display());
    if let TrainedModel::PcRnn(pc) = &model {
        let agreement = gradient_sign_agreement(pc, &all_windows).map_err(CliError::runtime)?;
        match agreement.fraction() {
            Some(f) => println!(
                "physics-head sign agreement: {f:.3} ({} of {} windows, {} excluded)",
                agreement.agreeing, agreement.counted, agreement.excluded
            ),
            None => println!("physics-head sign agreement: undefined (all deltas zero)"),
        }
    }
    Ok(())
}
