//! `pcrnn` command-line tool.
//!
//! Reproducible workflows over the core library: generate synthetic plants,
//! train and evaluate nowcasting models, run the sampling/training grid,
//! and monitor residuals for alarms. Every command is driven by one TOML
//! config (plus `--set` overrides) and is deterministic given the config.

pub mod commands;
pub mod config;
mod manifest;

use clap::{Parser, Subcommand};

use config::LoadedConfig;

/// Exit code 1: bad invocation or configuration.
/// Exit code 2: a runtime failure (IO, data, training).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn runtime(err: impl std::fmt::Display) -> Self {
        CliError::Runtime(err.to_string())
    }
}

const CONFIG_REFERENCE: &str = "\
CONFIG KEYS (TOML; every key is optional unless marked required, shown with its default):
  seed = 42                          master seed for every derived stream
  out_dir                            (required) output directory for all commands

  [hyperparams]
  batch_size = 16                    mini-batch size
  validation_fraction = 0.2          chronological tail held out for early stopping
  learning_rate = 0.001              Adam step size
  alpha_weight = 0.25                physics-loss weight (pcrnn only)
  lags = 5                           lag count M; windows span M+1 steps
  hidden_size = 16                   LSTM hidden units
  max_epochs = 100                   training epoch cap
  patience = 10                      epochs without validation improvement before stopping

  [simulate]
  plants = [\"A\", \"B\", \"C\"]     plant presets to generate
  n_turbines = 10                    turbines per plant
  duration_days = 181.0              simulated span (144 steps/day)
  start = \"2022-01-01T00:00:00Z\"   first timestamp
  [[simulate.faults]]                optional bearing faults (repeatable):
    plant, turbine, onset, mu_multiplier, ramp_days

  [train]
  model = \"pcrnn\"                  linear | rnn | pcrnn
  data                               (required) training CSV path
  turbines = []                      subset of turbine ids (empty = all)
  split                              optional boundary; train on records before it
  write_gaps = false                 also emit gaps.csv

  [evaluate]
  checkpoint                         (required) checkpoint path
  data                               (required) evaluation CSV path
  turbines = []                      subset of turbine ids (empty = all)
  split                              optional boundary; evaluate records at/after it

  [experiment]
  data_dir                           directory with plant_<id>.csv (default: out_dir)
  plants = [\"A\", \"B\", \"C\"]     plants participating in evaluation
  train_plants = [\"A\", \"B\", \"C\"]  plants models are trained on
  n_train = [1]                      training turbine counts
  repeats = 5                        repeats per cell (>= 2)
  models = [\"linear\", \"rnn\", \"pcrnn\"]
  split = \"2022-05-01T00:00:00Z\"   train/evaluation boundary

  [monitor]
  checkpoint                         (required) checkpoint path
  data                               (required) data CSV path
  turbines = []                      subset of turbine ids (empty = all)
  split                              (required) calibrate before, monitor at/after
  ewma_weight = 0.1                  residual smoothing weight
  threshold_sigmas = 4.0             control-limit multiplier k
  min_consecutive = 6                exceedances needed to confirm an alarm

All relative paths resolve against the config file's directory. Outputs are
written only under out_dir. Every command writes a manifest_<command>.toml
with the fully resolved configuration.";

#[derive(Parser, Debug)]
#[command(
    name = "pcrnn",
    version,
    about = "Physics-constrained nowcasting of wind-turbine bearing temperatures",
    after_long_help = CONFIG_REFERENCE
)]
pub struct Cli {
    /// Path to the TOML run configuration.
    #[arg(short, long, global = true, default_value = "pcrnn.toml")]
    pub config: std::path::PathBuf,

    /// Override single config keys, e.g. --set experiment.repeats=2.
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Worker threads for parallel sections (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Generate synthetic plant CSVs plus the ground-truth sidecar.
    Simulate,
    /// Train one model family and write a checkpoint plus loss history.
    Train,
    /// Evaluate a checkpoint on a data CSV (RMSE per turbine and pooled).
    Evaluate,
    /// Run the full sampling/training/evaluation grid and write report CSVs.
    Experiment,
    /// Calibrate on pre-split residuals and scan for alarms after it.
    Monitor,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Experiment => "experiment",
            Command::Monitor => "monitor",
        }
    }
}

/// Parses argv-style arguments and runs the command.
pub fn execute<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(&cli)
}

/// Runs a parsed invocation.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.jobs > 0 {
        // Ignore failure: the global pool can only be built once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let loaded = LoadedConfig::load(&cli.config, &cli.set)?;
    let out_dir = loaded.out_dir()?;
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create `{}`: {e}", out_dir.display())))?;
    manifest::write_manifest(&loaded, cli.command, &out_dir)?;
    match cli.command {
        Command::Simulate => commands::simulate::run(&loaded, &out_dir),
        Command::Train => commands::train::run(&loaded, &out_dir),
        Command::Evaluate => commands::evaluate::run(&loaded, &out_dir),
        Command::Experiment => commands::experiment::run(&loaded, &out_dir),
        Command::Monitor => commands::monitor::run(&loaded, &out_dir),
    }
}

/// Entry point used by `main`: returns the process exit code.
pub fn run_from_args() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
