//! Run configuration: one TOML file, every key with a documented default,
//! unknown keys rejected. `--set key=value` overrides individual keys before
//! deserialization; relative paths resolve against the config file's
//! directory.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; every stream used anywhere derives from it.
    pub seed: u64,
    /// Output directory (required by every command).
    pub out_dir: Option<String>,
    pub hyperparams: HyperConfig,
    pub simulate: SimulateConfig,
    pub train: TrainConfig,
    pub evaluate: EvaluateConfig,
    pub experiment: ExperimentConfig,
    pub monitor: MonitorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: None,
            hyperparams: HyperConfig::default(),
            simulate: SimulateConfig::default(),
            train: TrainConfig::default(),
            evaluate: EvaluateConfig::default(),
            experiment: ExperimentConfig::default(),
            monitor: MonitorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperConfig {
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub alpha_weight: f64,
    pub lags: usize,
    pub hidden_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            batch_size: 16,
            validation_fraction: 0.2,
            learning_rate: 0.001,
            alpha_weight: 0.25,
            lags: 5,
            hidden_size: 16,
            max_epochs: 100,
            patience: 10,
        }
    }
}

impl HyperConfig {
    pub fn to_hyperparams(&self, seed: u64) -> pcrnn_core::Hyperparams {
        pcrnn_core::Hyperparams {
            batch_size: self.batch_size,
            validation_fraction: self.validation_fraction,
            learning_rate: self.learning_rate,
            alpha_weight: self.alpha_weight,
            lags: self.lags,
            hidden_size: self.hidden_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Plant preset names to generate.
    pub plants: Vec<String>,
    pub n_turbines: usize,
    pub duration_days: f64,
    /// RFC 3339 start instant.
    pub start: String,
    pub faults: Vec<FaultConfig>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            plants: vec!["A".into(), "B".into(), "C".into()],
            n_turbines: 10,
            duration_days: 181.0,
            start: "2022-01-01T00:00:00Z".into(),
            faults: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub plant: String,
    pub turbine: String,
    /// RFC 3339 fault onset.
    pub onset: String,
    pub mu_multiplier: f64,
    pub ramp_days: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Model family: linear | rnn | pcrnn.
    pub model: String,
    /// Training CSV, relative to the config file.
    pub data: Option<String>,
    /// Turbines to use (empty = all).
    pub turbines: Vec<String>,
    /// Optional RFC 3339 boundary; training uses records strictly before it.
    pub split: Option<String>,
    /// Emit gaps.csv next to the other outputs.
    pub write_gaps: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: "pcrnn".into(),
            data: None,
            turbines: Vec::new(),
            split: None,
            write_gaps: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub checkpoint: Option<String>,
    pub data: Option<String>,
    /// Optional RFC 3339 boundary; evaluation uses records at/after it.
    pub split: Option<String>,
    pub turbines: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Directory holding `plant_<id>.csv` files (default: out_dir).
    pub data_dir: Option<String>,
    /// Every plant participating in evaluation.
    pub plants: Vec<String>,
    pub train_plants: Vec<String>,
    pub n_train: Vec<usize>,
    pub repeats: usize,
    pub models: Vec<String>,
    /// RFC 3339 boundary between training and evaluation periods.
    pub split: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_dir: None,
            plants: vec!["A".into(), "B".into(), "C".into()],
            train_plants: vec!["A".into(), "B".into(), "C".into()],
            n_train: vec![1],
            repeats: 5,
            models: vec!["linear".into(), "rnn".into(), "pcrnn".into()],
            split: "2022-05-01T00:00:00Z".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorConfig {
    pub checkpoint: Option<String>,
    pub data: Option<String>,
    pub turbines: Vec<String>,
    /// RFC 3339 boundary: residuals before it calibrate sigma0, records
    /// at/after it are monitored.
    pub split: Option<String>,
    pub ewma_weight: f64,
    pub threshold_sigmas: f64,
    pub min_consecutive: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            checkpoint: None,
            data: None,
            turbines: Vec::new(),
            split: None,
            ewma_weight: 0.1,
            threshold_sigmas: 4.0,
            min_consecutive: 6,
        }
    }
}

/// A loaded configuration plus the directory paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    /// Reads, applies `--set` overrides, and validates a config file.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        let mut table: toml::Table = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config `{}`: {e}", path.display())))?;
        for entry in overrides {
            apply_override(&mut table, entry)?;
        }
        let config: RunConfig = table
            .try_into()
            .map_err(|e| CliError::Usage(format!("config `{}`: {e}", path.display())))?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(LoadedConfig { config, base_dir })
    }

    /// Output directory (required by every command).
    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        let dir = self.config.out_dir.as_ref().ok_or_else(|| {
            CliError::Usage("missing required config key `out_dir`".to_string())
        })?;
        Ok(self.resolve(dir))
    }

    /// Resolves a path relative to the config file's directory.
    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Required string key helper: errors with the key path when absent.
    pub fn required<'a>(&self, value: &'a Option<String>, key: &str) -> Result<&'a str, CliError> {
        value
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("missing required config key `{key}`")))
    }
}

/// Applies one `key.path=value` override. The value is parsed as TOML (so
/// `2`, `0.25`, `true`, `"text"`, and `[1, 6]` all work); bare words fall
/// back to strings.
fn apply_override(table: &mut toml::Table, entry: &str) -> Result<(), CliError> {
    let Some((key, raw_value)) = entry.split_once('=') else {
        return Err(CliError::Usage(format!("--set needs key=value, got `{entry}`")));
    };
    let key = key.trim();
    let raw_value = raw_value.trim();
    let value = parse_toml_value(raw_value)
        .unwrap_or_else(|| toml::Value::String(raw_value.to_string()));

    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Usage(format!("--set key `{key}` is malformed")));
    }
    let mut current = table;
    for segment in &segments[..segments.len() - 1] {
        current = current
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                CliError::Usage(format!("--set key `{key}`: `{segment}` is not a table"))
            })?;
    }
    current.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

fn parse_toml_value(raw: &str) -> Option<toml::Value> {
    let doc: toml::Table = toml::from_str(&format!("v = {raw}")).ok()?;
    doc.get("v").cloned()
}

pub fn parse_rfc3339(value: &str, key: &str) -> Result<DateTime<Utc>, CliError> {
    DateTime::parse_from_rfc3339(value)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| CliError::Usage(format!("config key `{key}`: bad RFC 3339 timestamp `{value}`: {e}")))
}
