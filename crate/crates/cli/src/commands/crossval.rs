use gpcal_core::data::{split, split_pair, CalibrationDataset, Split, SplitSpec};
use gpcal_core::{Error, EvalReport, Result};
use rayon::prelude::*;

use super::{summarize, summary_cells, SUMMARY_COLUMNS};
use crate::pipeline::{
    refit, score_fold, train_model, FitOptions, FoldResult, KernelChoice, SplitArg,
};
use crate::report::{num, Table};
use crate::{create_out_dir, CrossvalArgs};

const METRICS: [&str; 4] = ["mae", "rmse", "r2", "coverage"];

fn metric(r: &EvalReport, name: &str) -> f64 {
    match name {
        "mae" => r.mae,
        "rmse" => r.rmse,
        "r2" => r.r2,
        _ => r.coverage,
    }
}

fn metric_cells(r: &FoldResult) -> Vec<String> {
    let mut v = vec![
        r.model.kernel().family().token().to_string(),
        r.train.n.to_string(),
        r.test.n.to_string(),
    ];
    v.extend(METRICS.iter().map(|m| num(metric(&r.train, m))));
    v.extend(METRICS.iter().map(|m| num(metric(&r.test, m))));
    v
}

fn fold_headers(leading: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = leading.iter().map(|s| s.to_string()).collect();
    h.extend(["kernel", "train_n", "test_n"].map(String::from));
    h.extend(METRICS.iter().map(|m| format!("train_{m}")));
    h.extend(METRICS.iter().map(|m| format!("test_{m}")));
    h
}

/// Validates the folds in index order. The first fold fixes the kernel
/// family (and, with `reuse_hypers`, the hyperparameters); the rest run
/// concurrently and are merged by index.
pub fn run_folds<F>(
    count: usize,
    make: F,
    opts: &FitOptions,
    reuse_hypers: bool,
    level: f64,
) -> Result<Vec<FoldResult>>
where
    F: Fn(usize) -> Result<Split> + Sync,
{
    if count == 0 {
        return Err(Error::Config(
            "cross-validation needs at least one fold".into(),
        ));
    }
    let first_split = make(0)?;
    let first = train_model(&first_split.train, opts)?;
    let kernel = *first.model.kernel();
    let noise = first.model.noise_std();
    let fixed = FitOptions {
        kernel: KernelChoice::Family(kernel.family()),
        ..opts.clone()
    };
    let head = score_fold(first.model, &first_split.train, &first_split.test, level)?;
    let rest: Result<Vec<FoldResult>> = (1..count)
        .into_par_iter()
        .map(|i| {
            let s = make(i)?;
            let model = if reuse_hypers {
                refit(&s.train, kernel, noise)?
            } else {
                train_model(&s.train, &fixed)?.model
            };
            score_fold(model, &s.train, &s.test, level)
        })
        .collect();
    let mut out = vec![head];
    out.extend(rest?);
    Ok(out)
}

fn summary_table(folds: &[FoldResult]) -> Table {
    let mut t = Table::new(SUMMARY_COLUMNS);
    for (set, pick) in [("train", 0), ("test", 1)] {
        for m in METRICS {
            let v: Vec<f64> = folds
                .iter()
                .map(|f| metric(if pick == 0 { &f.train } else { &f.test }, m))
                .collect();
            t.push(summary_cells(set, m, &summarize(&v)));
        }
    }
    t
}

fn run_random_or_kfold(
    args: &CrossvalArgs,
    dataset: &CalibrationDataset,
    opts: &FitOptions,
) -> Result<()> {
    let seed = args.fit.seed;
    let (folds, seeds): (Vec<FoldResult>, Vec<u64>) = match &args.split {
        SplitArg::Random(f) => {
            let f = *f;
            let make = |i: usize| {
                let spec = SplitSpec::RandomFraction {
                    train_fraction: f,
                    seed: seed.wrapping_add(i as u64),
                };
                split_pair(dataset, &spec)
            };
            let folds = run_folds(args.repeats, make, opts, args.reuse_hypers, args.fit.level)?;
            let seeds = (0..args.repeats as u64)
                .map(|i| seed.wrapping_add(i))
                .collect();
            (folds, seeds)
        }
        SplitArg::KFold(k) => {
            let pairs = split(dataset, &SplitSpec::KFold { k: *k, seed })?;
            let make = |i: usize| Ok(pairs[i].clone());
            let folds = run_folds(pairs.len(), make, opts, args.reuse_hypers, args.fit.level)?;
            (folds, vec![seed; pairs.len()])
        }
        SplitArg::ByRun(_) => unreachable!("handled by run_by_run"),
    };
    let mut t = Table::new(fold_headers(&["fold", "seed"]));
    for (i, (f, s)) in folds.iter().zip(&seeds).enumerate() {
        let mut row = vec![i.to_string(), s.to_string()];
        row.extend(metric_cells(f));
        t.push(row);
    }
    t.write_csv(&args.out.join("crossval_folds.csv"))?;
    println!(
        "{} folds written to {}",
        folds.len(),
        args.out.join("crossval_folds.csv").display()
    );
    summary_table(&folds).emit(&args.out, "crossval_summary.csv", "fold statistics")
}

/// A held-out run is extrapolation when its mean air temperature is the
/// lowest or highest among all runs.
pub fn is_extrapolation(dataset: &CalibrationDataset, run: &str) -> bool {
    let temps = dataset.run_temperatures();
    let lo = temps.values().copied().fold(f64::INFINITY, f64::min);
    let hi = temps.values().copied().fold(f64::NEG_INFINITY, f64::max);
    temps.get(run).is_some_and(|t| *t == lo || *t == hi)
}

fn run_by_run(
    args: &CrossvalArgs,
    dataset: &CalibrationDataset,
    opts: &FitOptions,
    ids: &[String],
) -> Result<()> {
    let runs: Vec<String> = if ids.is_empty() {
        dataset.run_ids()
    } else {
        ids.to_vec()
    };
    if dataset.run_ids().len() < 2 {
        return Err(Error::InvalidInput(
            "leave-one-run-out needs at least two runs".into(),
        ));
    }
    let make = |i: usize| {
        split_pair(
            dataset,
            &SplitSpec::ByRun {
                held_out: vec![runs[i].clone()],
            },
        )
    };
    let folds = run_folds(runs.len(), make, opts, args.reuse_hypers, args.fit.level)?;
    let temps = dataset.run_temperatures();

    let mut t = Table::new(fold_headers(&["run_id", "run_temp", "regime"]));
    let mut groups: [(&str, Vec<&FoldResult>); 3] = [
        ("all", vec![]),
        ("interpolation", vec![]),
        ("extrapolation", vec![]),
    ];
    for (run, f) in runs.iter().zip(&folds) {
        let regime = if is_extrapolation(dataset, run) {
            "extrapolation"
        } else {
            "interpolation"
        };
        let mut row = vec![run.clone(), num(temps[run]), regime.to_string()];
        row.extend(metric_cells(f));
        t.push(row);
        groups[0].1.push(f);
        groups[if regime == "interpolation" { 1 } else { 2 }]
            .1
            .push(f);
    }
    t.emit(&args.out, "byrun_folds.csv", "leave-one-run-out folds")?;

    let mut s = Table::new([
        "group",
        "folds",
        "train_rmse",
        "test_mae",
        "test_rmse",
        "test_r2",
        "test_coverage",
    ]);
    for (name, members) in &groups {
        let mean = |g: &dyn Fn(&FoldResult) -> f64| {
            if members.is_empty() {
                f64::NAN
            } else {
                members.iter().map(|f| g(f)).sum::<f64>() / members.len() as f64
            }
        };
        s.push(vec![
            name.to_string(),
            members.len().to_string(),
            num(mean(&|f| f.train.rmse)),
            num(mean(&|f| f.test.mae)),
            num(mean(&|f| f.test.rmse)),
            num(mean(&|f| f.test.r2)),
            num(mean(&|f| f.test.coverage)),
        ]);
    }
    s.emit(&args.out, "byrun_summary.csv", "fold means by regime")
}

pub fn run(args: &CrossvalArgs) -> Result<()> {
    let opts = args.fit.options()?;
    if matches!(args.split, SplitArg::Random(_)) && args.repeats == 0 {
        return Err(Error::Config("--repeats must be at least 1".into()));
    }
    let dataset = args.data.load()?;
    create_out_dir(&args.out)?;
    match &args.split {
        SplitArg::ByRun(ids) => run_by_run(args, &dataset, &opts, ids),
        _ => run_random_or_kfold(args, &dataset, &opts),
    }
}
