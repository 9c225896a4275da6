use gpcal_core::data::{
    inject_random_error_with, inject_systematic_error, split_pair, CalibrationDataset,
    ErrorDistribution,
};
use gpcal_core::model_io::load_model;
use gpcal_core::{Error, EvalReport, Result, TrainedModel};

use crate::pipeline::{evaluate, train_model};
use crate::report::{num, Table};
use crate::{create_out_dir, SensitivityArgs};

/// One row of the sensitivity table.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub error_type: &'static str,
    pub level: f64,
    pub report: EvalReport,
}

fn average(reports: &[EvalReport]) -> EvalReport {
    let k = reports.len() as f64;
    let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
    EvalReport {
        mae: mean(|r| r.mae),
        rmse: mean(|r| r.rmse),
        r2: mean(|r| r.r2),
        coverage: mean(|r| r.coverage),
        n: reports[0].n,
    }
}

/// Evaluates `model` on `test` with air-temperature errors injected.
///
/// Random amplitudes average `replicates` draws; replicate `r` uses seed
/// `seed + r` at every amplitude, so each draw is the same pattern scaled
/// by the amplitude. A zero level reproduces the clean evaluation exactly.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_rows(
    model: &TrainedModel,
    test: &CalibrationDataset,
    random_levels: &[f64],
    systematic_levels: &[f64],
    dist: ErrorDistribution,
    replicates: usize,
    seed: u64,
    level: f64,
) -> Result<Vec<SensitivityRow>> {
    if replicates == 0 {
        return Err(Error::Config("--replicates must be at least 1".into()));
    }
    if let Some(a) = random_levels
        .iter()
        .find(|a| !(a.is_finite() && **a >= 0.0))
    {
        return Err(Error::Config(format!(
            "random error amplitudes must be >= 0, got {a}"
        )));
    }
    if let Some(a) = systematic_levels.iter().find(|a| !a.is_finite()) {
        return Err(Error::Config(format!(
            "systematic offsets must be finite, got {a}"
        )));
    }
    let (clean, _) = evaluate(model, test, level)?;
    let mut rows = Vec::new();
    for &a in random_levels {
        let report = if a == 0.0 {
            clean
        } else {
            let reports = (0..replicates as u64)
                .map(|r| {
                    let noisy = inject_random_error_with(test, a, seed.wrapping_add(r), dist)?;
                    Ok(evaluate(model, &noisy, level)?.0)
                })
                .collect::<Result<Vec<_>>>()?;
            average(&reports)
        };
        rows.push(SensitivityRow {
            error_type: "random",
            level: a,
            report,
        });
    }
    for &off in systematic_levels {
        let report = if off == 0.0 {
            clean
        } else {
            evaluate(model, &inject_systematic_error(test, off), level)?.0
        };
        rows.push(SensitivityRow {
            error_type: "systematic",
            level: off,
            report,
        });
    }
    Ok(rows)
}

pub fn run(args: &SensitivityArgs) -> Result<()> {
    let dataset = args.data.load()?;
    let (model, test) = match &args.model {
        Some(p) => {
            crate::check_level(args.fit.level)?;
            (load_model(p)?, dataset)
        }
        None => {
            let opts = args.fit.options()?;
            let pair = split_pair(&dataset, &args.split.single(args.fit.seed)?)?;
            (train_model(&pair.train, &opts)?.model, pair.test)
        }
    };
    if test.is_empty() {
        return Err(Error::InvalidInput(
            "sensitivity needs a non-empty test set".into(),
        ));
    }
    let rows = sensitivity_rows(
        &model,
        &test,
        &args.random_levels,
        &args.systematic_levels,
        args.error_dist.into(),
        args.replicates,
        args.fit.seed,
        args.fit.level,
    )?;
    create_out_dir(&args.out)?;
    let mut t = Table::new(["error_type", "level", "n", "mae", "rmse", "r2", "coverage"]);
    for r in &rows {
        t.push(vec![
            r.error_type.into(),
            num(r.level),
            r.report.n.to_string(),
            num(r.report.mae),
            num(r.report.rmse),
            num(r.report.r2),
            num(r.report.coverage),
        ]);
    }
    println!("kernel: {}", model.kernel().family().token());
    t.emit(
        &args.out,
        "sensitivity.csv",
        "test accuracy under air-temperature errors",
    )
}
