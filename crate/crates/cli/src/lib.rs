//! `gpcal`: hot-wire anemometer calibration experiments from the command
//! line.
//!
//! Exit codes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 1    | i/o failure                               |
//! | 2    | invalid configuration or command line     |
//! | 3    | schema, parse or model-format error       |
//! | 4    | numerical failure                         |
//! | 5    | rejected input (empty or invalid data)    |

pub mod commands;
pub mod pipeline;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpcal_core::data::{self, CalibrationDataset, ErrorDistribution, SynthConfig};
use gpcal_core::optimize::Method;
use gpcal_core::{Error, ErrorKind, KernelFamily, LogBase, OptimizeConfig, Result};

pub use pipeline::{KernelChoice, SplitArg};

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SCHEMA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_INPUT: u8 = 5;

pub fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Schema => EXIT_SCHEMA,
        ErrorKind::Numerical => EXIT_NUMERICAL,
        ErrorKind::Input => EXIT_INPUT,
    }
}

/// Honors `GPCAL_THREADS` by sizing the global worker pool.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("GPCAL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n >= 1).ok_or_else(|| {
        Error::Config(format!(
            "GPCAL_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

#[derive(Debug, Parser)]
#[command(
    name = "gpcal",
    version,
    about = "Gaussian-process calibration of hot-wire anemometers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic King's-law calibration dataset.
    Synth(SynthArgs),
    /// Optimize hyperparameters, fit and save a model.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset and write per-point predictions.
    Evaluate(EvaluateArgs),
    /// Repeated random splits, k-fold, or leave-one-run-out validation.
    Crossval(CrossvalArgs),
    /// Test-set degradation under air-temperature errors.
    Sensitivity(SensitivityArgs),
    /// BIC comparison of all kernel families plus a linear baseline.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML generator configuration; defaults apply to missing keys.
    #[arg(long = "synth-config", value_name = "PATH")]
    pub synth_config: Option<PathBuf>,
    /// Overrides the generator seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

/// Where the calibration data comes from.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Calibration CSV (`voltage,air_temp,wind_speed,run_id`).
    #[arg(long, value_name = "PATH", conflicts_with = "synth_config")]
    pub data: Option<PathBuf>,
    /// Generate the data in memory from this TOML configuration instead.
    #[arg(long = "synth-config", value_name = "PATH")]
    pub synth_config: Option<PathBuf>,
}

impl DataArgs {
    pub fn load(&self) -> Result<CalibrationDataset> {
        match (&self.data, &self.synth_config) {
            (Some(p), None) => data::load_csv(p),
            (None, Some(p)) => data::synthesize(&read_synth_config(p)?),
            _ => Err(Error::Config(
                "pass either --data PATH or --synth-config PATH".into(),
            )),
        }
    }
}

pub fn read_synth_config(path: &std::path::Path) -> Result<SynthConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Bfgs,
    Cg,
}

/// Hyperparameter search settings.
#[derive(Debug, Args)]
pub struct FitArgs {
    /// Kernel family, or `auto` to pick the lowest BIC on the training data.
    #[arg(long, value_name = "se|exp|matern52|rq|auto", default_value = "auto")]
    pub kernel: KernelChoice,
    /// Optimizer restarts per kernel.
    #[arg(long, value_name = "R", default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value = "bfgs")]
    pub optimizer: OptimizerArg,
    #[arg(long = "max-iters", value_name = "N", default_value_t = 200)]
    pub max_iters: usize,
    /// Seeds both the split and the optimizer starting points.
    #[arg(long, value_name = "U64", default_value_t = 0)]
    pub seed: u64,
    /// Credible level of reported intervals.
    #[arg(long, value_name = "P", default_value_t = 0.95)]
    pub level: f64,
    /// Logarithm base of the BIC penalty.
    #[arg(long = "bic-base", value_name = "e|10", default_value = "e")]
    pub bic_base: LogBase,
}

impl FitArgs {
    pub fn optimize_config(&self) -> Result<OptimizeConfig> {
        let cfg = OptimizeConfig {
            method: match self.optimizer {
                OptimizerArg::Bfgs => Method::Bfgs,
                OptimizerArg::Cg => Method::ConjugateGradient,
            },
            restarts: self.restarts,
            max_iters: self.max_iters,
            init_seed: self.seed,
            ..OptimizeConfig::default()
        };
        cfg.validate()?;
        check_level(self.level)?;
        Ok(cfg)
    }

    pub fn options(&self) -> Result<pipeline::FitOptions> {
        Ok(pipeline::FitOptions {
            kernel: self.kernel,
            optimize: self.optimize_config()?,
            bic_base: self.bic_base,
        })
    }
}

pub fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "--level must lie in (0, 1), got {level}"
        )))
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Hold out part of the data (`random:FRAC` or `byrun:ID[,ID...]`); the
    /// two portions are written next to the model.
    #[arg(long, value_name = "SPEC")]
    pub split: Option<SplitArg>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    #[arg(long, value_name = "P", default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// `random:FRAC`, `kfold:K`, `byrun:all` or `byrun:ID[,ID...]`.
    #[arg(long, value_name = "SPEC", default_value = "random:0.7")]
    pub split: SplitArg,
    /// Number of random splits.
    #[arg(long, value_name = "R", default_value_t = 100)]
    pub repeats: usize,
    /// Optimize hyperparameters on the first split only and refit the rest
    /// with them.
    #[arg(long = "reuse-hypers")]
    pub reuse_hypers: bool,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ErrorDistArg {
    Uniform,
    Gaussian,
}

impl From<ErrorDistArg> for ErrorDistribution {
    fn from(v: ErrorDistArg) -> Self {
        match v {
            ErrorDistArg::Uniform => ErrorDistribution::Uniform,
            ErrorDistArg::Gaussian => ErrorDistribution::Gaussian,
        }
    }
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Use this trained model and treat the data as the clean test set.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Train/test split used when no model is given.
    #[arg(long, value_name = "SPEC", default_value = "random:0.7")]
    pub split: SplitArg,
    /// Random air-temperature error amplitudes (°C).
    #[arg(
        long = "random-levels",
        value_name = "LIST",
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.5,1.0"
    )]
    pub random_levels: Vec<f64>,
    /// Systematic air-temperature offsets (°C).
    #[arg(
        long = "systematic-levels",
        value_name = "LIST",
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.5,1.0"
    )]
    pub systematic_levels: Vec<f64>,
    #[arg(long = "error-dist", value_enum, default_value = "uniform")]
    pub error_dist: ErrorDistArg,
    /// Independent random-error draws averaged per amplitude.
    #[arg(long, value_name = "N", default_value_t = 10)]
    pub replicates: usize,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Score test metrics on a held-out portion (`random:FRAC` or
    /// `byrun:ID[,ID...]`); BIC always uses the training portion.
    #[arg(long, value_name = "SPEC")]
    pub split: Option<SplitArg>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => commands::synth::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Crossval(a) => commands::crossval::run(a),
        Command::Sensitivity(a) => commands::sensitivity::run(a),
        Command::Compare(a) => commands::compare::run(a),
    }
}

/// Families compared by `compare` and by `--kernel auto`, in table order.
pub const FAMILIES: [KernelFamily; 4] = KernelFamily::ALL;

pub(crate) fn create_out_dir(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_owned(),
        source: e,
    })
}
