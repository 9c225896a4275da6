//! Steps shared by the subcommands: choosing a kernel, training on one
//! portion of the data and scoring another.

use std::fmt;
use std::str::FromStr;

use gpcal_core::data::{CalibrationDataset, NormalizationTransform, SplitSpec};
use gpcal_core::gp::{fit, Prediction, TrainedModel};
use gpcal_core::optimize::{optimize_hyperparameters, OptimizeResult};
use gpcal_core::select::{compare_kernels, FamilyOutcome};
use gpcal_core::{Error, EvalReport, KernelFamily, KernelSpec, LogBase, OptimizeConfig, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelChoice {
    Auto,
    Family(KernelFamily),
}

impl FromStr for KernelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(KernelChoice::Auto)
        } else {
            s.parse().map(KernelChoice::Family)
        }
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelChoice::Auto => f.write_str("auto"),
            KernelChoice::Family(k) => f.write_str(k.token()),
        }
    }
}

/// Command-line split syntax.
#[derive(Clone, Debug, PartialEq)]
pub enum SplitArg {
    Random(f64),
    KFold(usize),
    /// Runs to hold out; empty means every run in turn.
    ByRun(Vec<String>),
}

impl FromStr for SplitArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "invalid split '{s}' (use random:FRAC, kfold:K, byrun:all or byrun:ID[,ID...])"
            ))
        };
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "random" => {
                let f: f64 = rest.parse().map_err(|_| bad())?;
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Config(format!(
                        "train fraction must lie in (0, 1), got {f}"
                    )));
                }
                Ok(SplitArg::Random(f))
            }
            "kfold" => {
                let k: usize = rest.parse().map_err(|_| bad())?;
                if k < 2 {
                    return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
                }
                Ok(SplitArg::KFold(k))
            }
            "byrun" if rest == "all" => Ok(SplitArg::ByRun(Vec::new())),
            "byrun" => {
                let ids: Vec<String> = rest.split(',').map(|t| t.trim().to_owned()).collect();
                if ids.iter().any(String::is_empty) {
                    return Err(bad());
                }
                Ok(SplitArg::ByRun(ids))
            }
            _ => Err(bad()),
        }
    }
}

impl SplitArg {
    /// A single train/test partition; k-fold and `byrun:all` have no single
    /// partition.
    pub fn single(&self, seed: u64) -> Result<SplitSpec> {
        match self {
            SplitArg::Random(f) => Ok(SplitSpec::RandomFraction {
                train_fraction: *f,
                seed,
            }),
            SplitArg::ByRun(ids) if !ids.is_empty() => Ok(SplitSpec::ByRun {
                held_out: ids.clone(),
            }),
            _ => Err(Error::Config(
                "this command needs a single partition: random:FRAC or byrun:ID[,ID...]".into(),
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub kernel: KernelChoice,
    pub optimize: OptimizeConfig,
    pub bic_base: LogBase,
}

/// A trained model with the search that produced it.
#[derive(Clone, Debug)]
pub struct Fitted {
    pub model: TrainedModel,
    pub optimization: OptimizeResult,
}

fn first_success(rows: Vec<FamilyOutcome>) -> Result<Fitted> {
    let mut first_err = None;
    for row in rows {
        match row.result {
            Ok(c) => {
                return Ok(Fitted {
                    model: c.model,
                    optimization: c.optimization,
                })
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or_else(|| Error::Config("no kernel families".into())))
}

/// Normalizes on `train`, optimizes and fits. `Auto` selects the family
/// with the lowest BIC on `train`.
pub fn train_model(train: &CalibrationDataset, opts: &FitOptions) -> Result<Fitted> {
    match opts.kernel {
        KernelChoice::Auto => first_success(compare_kernels(
            train,
            &KernelFamily::ALL,
            &opts.optimize,
            opts.bic_base,
        )?),
        KernelChoice::Family(family) => {
            let transform = NormalizationTransform::fit(train)?;
            let (x, y) = transform.normalize(train);
            let optimization = optimize_hyperparameters(&x, &y, family, &opts.optimize)?;
            let model =
                fit(&x, &y, optimization.kernel, optimization.noise_std)?.with_transform(transform);
            Ok(Fitted {
                model,
                optimization,
            })
        }
    }
}

/// Fits fixed hyperparameters to `train` with its own normalization.
pub fn refit(
    train: &CalibrationDataset,
    kernel: KernelSpec,
    noise_std: f64,
) -> Result<TrainedModel> {
    let transform = NormalizationTransform::fit(train)?;
    let (x, y) = transform.normalize(train);
    Ok(fit(&x, &y, kernel, noise_std)?.with_transform(transform))
}

/// Predicts `data` and scores the predictions.
pub fn evaluate(
    model: &TrainedModel,
    data: &CalibrationDataset,
    level: f64,
) -> Result<(EvalReport, Vec<Prediction>)> {
    let predictions = model.predict_dataset(data, level)?;
    let report = EvalReport::from_predictions(&data.wind_speeds(), &predictions, level)?;
    Ok((report, predictions))
}

/// Train and test reports for one partition.
#[derive(Clone, Debug)]
pub struct FoldResult {
    pub model: TrainedModel,
    pub train: EvalReport,
    pub test: EvalReport,
}

pub fn score_fold(
    model: TrainedModel,
    train: &CalibrationDataset,
    test: &CalibrationDataset,
    level: f64,
) -> Result<FoldResult> {
    let (train_report, _) = evaluate(&model, train, level)?;
    let (test_report, _) = evaluate(&model, test, level)?;
    Ok(FoldResult {
        model,
        train: train_report,
        test: test_report,
    })
}
