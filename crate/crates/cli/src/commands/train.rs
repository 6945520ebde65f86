//! `pcrnn train`: fit one model family, write the checkpoint and the
//! per-epoch loss history.

use std::path::Path;

use pcrnn_core::data::{time_split, SplitSpec};
use pcrnn_core::models::{save_checkpoint, ModelFamily};
use pcrnn_core::train::{train, TrainingHistory};

use crate::config::{parse_rfc3339, LoadedConfig};
use crate::CliError;

use super::{csv_io_err, csv_writer, filter_turbines, load_plant_csv, windows_of};

pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config.train;
    let family: ModelFamily =
        cfg.model.parse().map_err(|e| CliError::Usage(format!("config key `train.model`: {e}")))?;
    let data_path = loaded.resolve(loaded.required(&cfg.data, "train.data")?);

    let mut dataset = load_plant_csv(&data_path)?;
    filter_turbines(&mut dataset, &cfg.turbines)?;
    if let Some(split) = &cfg.split {
        let boundary = parse_rfc3339(split, "train.split")?;
        let (train_side, _) =
            time_split(&dataset, SplitSpec { boundary }).map_err(CliError::runtime)?;
        dataset = train_side;
    }

    let hyper = loaded.config.hyperparams.to_hyperparams(loaded.config.seed);
    let (windows, gaps) = windows_of(&dataset, hyper.lags);
    if cfg.write_gaps {
        write_gaps_csv(&gaps, &out_dir.join("gaps.csv"))?;
    }

    let (model, history) = train(family, &windows, &hyper).map_err(CliError::runtime)?;

    let checkpoint_path = out_dir.join(checkpoint_file_name(family));
    save_checkpoint(&model, &checkpoint_path).map_err(CliError::runtime)?;
    let history_path = out_dir.join(format!("history_{family}.csv"));
    write_history_csv(&history, &history_path)?;

    let best_val = history
        .iter()
        .map(|e| e.validation.total)
        .fold(f64::INFINITY, f64::min);
    println!(
        "trained {family} on {} windows, {} epochs, best validation loss {:.6} -> {}",
        windows.len(),
        history.len(),
        best_val,
        checkpoint_path.display()
    );
    Ok(())
}

pub(crate) fn checkpoint_file_name(family: ModelFamily) -> String {
    match family {
        ModelFamily::Linear => "checkpoint_linear.csv".to_string(),
        other => format!("checkpoint_{other}.txt"),
    }
}

fn write_history_csv(history: &TrainingHistory<f64>, path: &Path) -> Result<(), CliError> {
    let mut csv = csv_writer(path)?;
    let err = csv_io_err(path);
    csv.write_record([
        "epoch",
        "train_pred_loss",
        "train_phys_loss",
        "train_total_loss",
        "val_pred_loss",
        "val_phys_loss",
        "val_total_loss",
    ])
    .map_err(&err)?;
    for (epoch, stats) in history.iter().enumerate() {
        csv.write_record(&[
            epoch.to_string(),
            format!("{}", stats.train.pred_loss),
            format!("{}", stats.train.phys_loss),
            format!("{}", stats.train.total),
            format!("{}", stats.validation.pred_loss),
            format!("{}", stats.validation.phys_loss),
            format!("{}", stats.validation.total),
        ])
        .map_err(&err)?;
    }
    csv.flush().map_err(|e| CliError::Runtime(format!("writing `{}`: {e}", path.display())))
}

fn write_gaps_csv(gaps: &[pcrnn_core::data::Gap], path: &Path) -> Result<(), CliError> {
    let mut csv = csv_writer(path)?;
    let err = csv_io_err(path);
    csv.write_record(["turbine_id", "gap_start", "gap_end"]).map_err(&err)?;
    for gap in gaps {
        csv.write_record(&[
            gap.turbine_id.clone(),
            gap.start.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            gap.end.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        ])
        .map_err(&err)?;
    }
    csv.flush().map_err(|e| CliError::Runtime(format!("writing `{}`: {e}", path.display())))
}
