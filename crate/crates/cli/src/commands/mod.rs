pub mod evaluate;
pub mod experiment;
pub mod monitor;
pub mod simulate;
pub mod train;

use std::path::Path;

use pcrnn_core::data::{build_windows, parse_scada_csv};
use pcrnn_core::{PlantDataset, WindowSample};

use crate::CliError;

/// Parses a plant CSV, taking the plant id from the file stem
/// (`plant_A.csv` -> `A`).
pub(crate) fn load_plant_csv(path: &Path) -> Result<PlantDataset, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Runtime(format!("cannot open `{}`: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("plant");
    let plant_id = stem.strip_prefix("plant_").unwrap_or(stem);
    parse_scada_csv(std::io::BufReader::new(file), plant_id)
        .map_err(|e| CliError::Runtime(format!("`{}`: {e}", path.display())))
}

/// Keeps only the requested turbines (empty filter = everything).
pub(crate) fn filter_turbines(
    dataset: &mut PlantDataset,
    turbines: &[String],
) -> Result<(), CliError> {
    if turbines.is_empty() {
        return Ok(());
    }
    for id in turbines {
        if !dataset.turbines.contains_key(id) {
            return Err(CliError::Runtime(format!(
                "turbine `{id}` not present in plant `{}`",
                dataset.plant_id
            )));
        }
    }
    dataset.turbines.retain(|id, _| turbines.contains(id));
    Ok(())
}

/// Windows over every turbine of a dataset, ordered by turbine id, plus the
/// per-turbine gap reports.
pub(crate) fn windows_of(
    dataset: &PlantDataset,
    lags: usize,
) -> (Vec<WindowSample>, Vec<pcrnn_core::data::Gap>) {
    let mut windows = Vec::new();
    let mut gaps = Vec::new();
    for series in dataset.turbines.values() {
        let (w, g) = build_windows(series, lags);
        windows.extend(w);
        gaps.extend(g);
    }
    (windows, gaps)
}

/// CSV writer with CRLF line endings (all tabular outputs use it).
pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot create `{}`: {e}", path.display())))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file))
}

pub(crate) fn csv_io_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("writing `{}`: {e}", path.display()))
}
