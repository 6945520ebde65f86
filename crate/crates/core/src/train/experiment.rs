//! The sampling/training/evaluation grid and its report.
//!
//! For every (train plant, turbine count, repeat) cell: sample turbines with
//! a fresh derived seed, train each model family on the pre-boundary windows
//! of the sampled turbines, then evaluate post-boundary RMSE on
//!
//! * the sampled turbines themselves (`test`),
//! * the held-out turbines of the same plant (`in-plant-generalization`),
//! * every turbine of each other plant (`cross-plant-generalization`),
//!
//! and aggregate mean +- standard error across repeats. Repeats run in
//! parallel; every seed is derived from the experiment seed and the cell indices,
//! so reports are identical regardless of thread count.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use thiserror::Error;

use crate::data::{build_windows, time_split, DataError, PlantDataset, SplitSpec, WindowSample};
use crate::metrics::{rmse, standard_error};
use crate::models::{ModelFamily, TrainedModel};
use crate::num::Real;
use crate::rng::derive_seed;

use super::{train, Hyperparams, TrainError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("plant `{0}` not found among the provided datasets")]
    UnknownPlant(String),
    #[error("training failed (plant {plant}, n_train {n_train}, repeat {repeat}, model {family}): {source}")]
    Train {
        plant: String,
        n_train: usize,
        repeat: usize,
        family: ModelFamily,
        source: TrainError,
    },
    #[error("evaluation failed ({context}): {message}")]
    Eval { context: String, message: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Where an evaluation cell sits relative to the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EvalCategory {
    Test,
    InPlantGeneralization,
    CrossPlantGeneralization,
}

impl EvalCategory {
    pub fn name(&self) -> &'static str {
        match self {
            EvalCategory::Test => "test",
            EvalCategory::InPlantGeneralization => "in-plant-generalization",
            EvalCategory::CrossPlantGeneralization => "cross-plant-generalization",
        }
    }
}

impl std::fmt::Display for EvalCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Full experiment grid.
#[derive(Debug, Clone)]
pub struct ExperimentSpec<S> {
    pub train_plants: Vec<String>,
    pub n_train: Vec<usize>,
    pub repeats: usize,
    pub models: Vec<ModelFamily>,
    /// Time split: training strictly before, evaluation at/after.
    pub boundary: DateTime<Utc>,
    pub seed: u64,
    pub hyper: Hyperparams<S>,
}

impl<S: Real> ExperimentSpec<S> {
    fn validate(&self) -> Result<(), ExperimentError> {
        if self.repeats < 2 {
            return Err(ExperimentError::InvalidSpec(format!(
                "repeats must be >= 2 for standard errors, got {}",
                self.repeats
            )));
        }
        if self.train_plants.is_empty() || self.n_train.is_empty() || self.models.is_empty() {
            return Err(ExperimentError::InvalidSpec(
                "train_plants, n_train, and models must be non-empty".into(),
            ));
        }
        Ok(())
    }
}

/// One aggregated cell of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow<S> {
    pub train_plant: String,
    pub eval_plant: String,
    pub category: EvalCategory,
    pub model: ModelFamily,
    pub n_train: usize,
    pub rmse_mean: S,
    pub rmse_se: S,
    pub repeats: usize,
}

/// One repeat's raw result, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatRow<S> {
    pub train_plant: String,
    pub eval_plant: String,
    pub category: EvalCategory,
    pub model: ModelFamily,
    pub n_train: usize,
    pub repeat: usize,
    pub seed: u64,
    pub rmse: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport<S> {
    pub summary: Vec<ReportRow<S>>,
    pub repeats: Vec<RepeatRow<S>>,
}

impl<S: Real> ExperimentReport<S> {
    pub fn cell(
        &self,
        train_plant: &str,
        eval_plant: &str,
        category: EvalCategory,
        model: ModelFamily,
        n_train: usize,
    ) -> Option<&ReportRow<S>> {
        self.summary.iter().find(|r| {
            r.train_plant == train_plant
                && r.eval_plant == eval_plant
                && r.category == category
                && r.model == model
                && r.n_train == n_train
        })
    }
}

/// Per-plant windows built once and shared by every repeat.
struct PlantWindows<S> {
    train: BTreeMap<String, Vec<WindowSample<S>>>,
    test: BTreeMap<String, Vec<WindowSample<S>>>,
}

fn prepare_plant<S: Real>(
    dataset: &PlantDataset<S>,
    boundary: DateTime<Utc>,
    lags: usize,
) -> Result<PlantWindows<S>, ExperimentError> {
    let (train_side, test_side) = time_split(dataset, SplitSpec { boundary })?;
    let windows_of = |side: &PlantDataset<S>| {
        side.turbines
            .iter()
            .map(|(id, series)| (id.clone(), build_windows(series, lags).0))
            .collect::<BTreeMap<_, _>>()
    };
    Ok(PlantWindows { train: windows_of(&train_side), test: windows_of(&test_side) })
}

type CellResult<S> = (ModelFamily, Vec<(String, EvalCategory, S)>);

/// Runs the whole grid. See the module docs for the protocol.
pub fn run_experiment<S: Real>(
    spec: &ExperimentSpec<S>,
    datasets: &[PlantDataset<S>],
) -> Result<ExperimentReport<S>, ExperimentError> {
    spec.validate()?;
    let by_id: BTreeMap<&str, &PlantDataset<S>> =
        datasets.iter().map(|d| (d.plant_id.as_str(), d)).collect();
    for plant in &spec.train_plants {
        if !by_id.contains_key(plant.as_str()) {
            return Err(ExperimentError::UnknownPlant(plant.clone()));
        }
    }

    let mut prepared: BTreeMap<String, PlantWindows<S>> = BTreeMap::new();
    for dataset in datasets {
        prepared.insert(
            dataset.plant_id.clone(),
            prepare_plant(dataset, spec.boundary, spec.hyper.lags)?,
        );
    }

    // The job grid, flattened for parallel execution.
    struct Job {
        plant_index: usize,
        n_train: usize,
        repeat: usize,
    }
    let mut jobs = Vec::new();
    for plant_index in 0..spec.train_plants.len() {
        for &n_train in &spec.n_train {
            for repeat in 0..spec.repeats {
                jobs.push(Job { plant_index, n_train, repeat });
            }
        }
    }

    let results: Vec<(usize, usize, usize, u64, Vec<CellResult<S>>)> = jobs
        .par_iter()
        .map(|job| {
            let plant = &spec.train_plants[job.plant_index];
            let job_seed = derive_seed(
                derive_seed(derive_seed(spec.seed, job.plant_index as u64), job.n_train as u64),
                job.repeat as u64,
            );
            let cells = run_repeat(spec, &prepared, plant, job.n_train, job.repeat, job_seed, &by_id)?;
            Ok((job.plant_index, job.n_train, job.repeat, job_seed, cells))
        })
        .collect::<Result<_, ExperimentError>>()?;

    // Deterministic aggregation: results arrive in job order.
    let mut repeats_rows: Vec<RepeatRow<S>> = Vec::new();
    let mut grouped: BTreeMap<(String, String, EvalCategory, String, usize), Vec<S>> =
        BTreeMap::new();
    for (plant_index, n_train, repeat, job_seed, cells) in results {
        let train_plant = &spec.train_plants[plant_index];
        for (family, family_cells) in cells {
            for (eval_plant, category, value) in family_cells {
                repeats_rows.push(RepeatRow {
                    train_plant: train_plant.clone(),
                    eval_plant: eval_plant.clone(),
                    category,
                    model: family,
                    n_train,
                    repeat,
                    seed: job_seed,
                    rmse: value,
                });
                grouped
                    .entry((
                        train_plant.clone(),
                        eval_plant,
                        category,
                        family.name().to_string(),
                        n_train,
                    ))
                    .or_default()
                    .push(value);
            }
        }
    }

    let mut summary = Vec::with_capacity(grouped.len());
    for ((train_plant, eval_plant, category, model, n_train), values) in grouped {
        let model: ModelFamily = model.parse().expect("names round-trip");
        let mean = values.iter().copied().sum::<S>() / crate::num::real(values.len() as f64);
        let se = standard_error(&values).map_err(|source| ExperimentError::Eval {
            context: format!("standard error of cell {train_plant}/{eval_plant}/{model}"),
            message: source.to_string(),
        })?;
        summary.push(ReportRow {
            train_plant,
            eval_plant,
            category,
            model,
            n_train,
            rmse_mean: mean,
            rmse_se: se,
            repeats: values.len(),
        });
    }

    Ok(ExperimentReport { summary, repeats: repeats_rows })
}

fn run_repeat<S: Real>(
    spec: &ExperimentSpec<S>,
    prepared: &BTreeMap<String, PlantWindows<S>>,
    plant: &str,
    n_train: usize,
    repeat: usize,
    job_seed: u64,
    by_id: &BTreeMap<&str, &PlantDataset<S>>,
) -> Result<Vec<CellResult<S>>, ExperimentError> {
    let dataset = by_id[plant];
    let (selected, held_out) =
        crate::data::sample_turbines(dataset, n_train, derive_seed(job_seed, 0))?;
    let windows = &prepared[plant];

    let mut train_windows: Vec<WindowSample<S>> = Vec::new();
    for id in selected.turbine_ids() {
        if let Some(w) = windows.train.get(&id) {
            train_windows.extend(w.iter().cloned());
        }
    }

    // One shared model seed per repeat: families must see identical
    // randomness for the alpha = 0 reduction identity to hold.
    let hyper = Hyperparams { seed: derive_seed(job_seed, 1), ..spec.hyper.clone() };

    let mut out = Vec::with_capacity(spec.models.len());
    for &family in &spec.models {
        let (model, _history) =
            train(family, &train_windows, &hyper).map_err(|source| ExperimentError::Train {
                plant: plant.to_string(),
                n_train,
                repeat,
                family,
                source,
            })?;

        let mut cells = Vec::new();
        let eval = |ids: &[String],
                    source: &PlantWindows<S>,
                    context: &str|
         -> Result<S, ExperimentError> {
            pooled_rmse(&model, ids, &source.test).map_err(|message| ExperimentError::Eval {
                context: format!("{context} (plant {plant}, repeat {repeat})"),
                message,
            })
        };

        cells.push((plant.to_string(), EvalCategory::Test, eval(&selected.turbine_ids(), windows, "test")?));
        if !held_out.turbines.is_empty() {
            cells.push((
                plant.to_string(),
                EvalCategory::InPlantGeneralization,
                eval(&held_out.turbine_ids(), windows, "in-plant generalization")?,
            ));
        }
        for (other_id, other_windows) in prepared {
            if other_id == plant {
                continue;
            }
            let ids: Vec<String> = other_windows.test.keys().cloned().collect();
            cells.push((
                other_id.clone(),
                EvalCategory::CrossPlantGeneralization,
                eval(&ids, other_windows, "cross-plant generalization")?,
            ));
        }
        out.push((family, cells));
    }
    Ok(out)
}

fn pooled_rmse<S: Real>(
    model: &TrainedModel<S>,
    turbine_ids: &[String],
    test: &BTreeMap<String, Vec<WindowSample<S>>>,
) -> Result<S, String> {
    let mut predictions = Vec::new();
    let mut targets = Vec::new();
    for id in turbine_ids {
        let Some(windows) = test.get(id) else { continue };
        for window in windows {
            let p = model.nowcast(window).map_err(|e| e.to_string())?;
            predictions.push(p);
            targets.push(window.target);
        }
    }
    rmse(&predictions, &targets).map_err(|e| e.to_string())
}

/// Writes the aggregated report
/// (`train_plant,eval_plant,category,model,n_train,rmse_mean,rmse_se,repeats`).
pub fn write_summary_csv<S: Real, W: Write>(
    report: &ExperimentReport<S>,
    writer: W,
) -> Result<(), ExperimentError> {
    let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(writer);
    let io_err = |e: csv::Error| std::io::Error::new(std::io::ErrorKind::Other, e);
    csv.write_record([
        "train_plant",
        "eval_plant",
        "category",
        "model",
        "n_train",
        "rmse_mean",
        "rmse_se",
        "repeats",
    ])
    .map_err(io_err)?;
    for row in &report.summary {
        csv.write_record(&[
            row.train_plant.clone(),
            row.eval_plant.clone(),
            row.category.to_string(),
            row.model.to_string(),
            row.n_train.to_string(),
            format!("{}", row.rmse_mean),
            format!("{}", row.rmse_se),
            row.repeats.to_string(),
        ])
        .map_err(io_err)?;
    }
    csv.flush()?;
    Ok(())
}

/// Writes the long-format per-repeat rows.
pub fn write_repeats_csv<S: Real, W: Write>(
    report: &ExperimentReport<S>,
    writer: W,
) -> Result<(), ExperimentError> {
    let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(writer);
    let io_err = |e: csv::Error| std::io::Error::new(std::io::ErrorKind::Other, e);
    csv.write_record([
        "train_plant",
        "eval_plant",
        "category",
        "model",
        "n_train",
        "repeat",
        "seed",
        "rmse",
    ])
    .map_err(io_err)?;
    for row in &report.repeats {
        csv.write_record(&[
            row.train_plant.clone(),
            row.eval_plant.clone(),
            row.category.to_string(),
            row.model.to_string(),
            row.n_train.to_string(),
            row.repeat.to_string(),
            row.seed.to_string(),
            format!("{}", row.rmse),
        ])
        .map_err(io_err)?;
    }
    csv.flush()?;
    Ok(())
}
