use gpcal_core::data::{split_pair, CalibrationDataset, NormalizationTransform};
use gpcal_core::select::{compare_kernels, linear_baseline_fit, FamilyOutcome};
use gpcal_core::{EvalReport, Result};

use super::push_optimization_rows;
use crate::pipeline::evaluate;
use crate::report::{num, report_cells, Table, REPORT_COLUMNS};
use crate::{create_out_dir, CompareArgs, FAMILIES};

fn linear_report(train: &CalibrationDataset, data: &CalibrationDataset) -> Result<EvalReport> {
    let transform = NormalizationTransform::fit(train)?;
    let (x, y) = transform.normalize(train);
    let model = linear_baseline_fit(&x, &y)?;
    let pred = model.predict(&transform.normalize_inputs(&data.raw_inputs()))?;
    EvalReport::from_point_predictions(&data.wind_speeds(), &pred)
}

pub fn run(args: &CompareArgs) -> Result<()> {
    let opts = args.fit.options()?;
    let dataset = args.data.load()?;
    let (train, test) = match &args.split {
        Some(s) => {
            let pair = split_pair(&dataset, &s.single(args.fit.seed)?)?;
            (pair.train, Some(pair.test))
        }
        None => (dataset, None),
    };
    let outcomes = compare_kernels(&train, &FAMILIES, &opts.optimize, opts.bic_base)?;
    if outcomes.iter().all(|o| o.ok().is_none()) {
        let first = outcomes.into_iter().next().expect("non-empty family list");
        return Err(first.result.expect_err("all failed"));
    }
    create_out_dir(&args.out)?;

    let mut bic = Table::new(["kernel", "log_marginal", "m", "n", "bic", "status"]);
    let mut opt = Table::new(super::OPTIMIZATION_COLUMNS);
    let mut metrics = Table::new(["model", "dataset"].into_iter().chain(REPORT_COLUMNS));
    let mut push_metrics = |model: &str, set: &str, r: &EvalReport| {
        let mut row = vec![model.to_string(), set.to_string()];
        row.extend(report_cells(r));
        metrics.push(row);
    };
    for FamilyOutcome { family, result, .. } in &outcomes {
        match result {
            Ok(c) => {
                bic.push(vec![
                    family.token().into(),
                    num(c.row.log_marginal),
                    c.row.m.to_string(),
                    c.row.n.to_string(),
                    num(c.row.bic),
                    "ok".into(),
                ]);
                push_optimization_rows(&mut opt, *family, &c.optimization);
                push_metrics(
                    family.token(),
                    "train",
                    &evaluate(&c.model, &train, args.fit.level)?.0,
                );
                if let Some(test) = &test {
                    push_metrics(
                        family.token(),
                        "test",
                        &evaluate(&c.model, test, args.fit.level)?.0,
                    );
                }
            }
            Err(e) => bic.push(vec![
                family.token().into(),
                String::new(),
                family.num_params().to_string(),
                train.len().to_string(),
                String::new(),
                format!("failed: {e}"),
            ]),
        }
    }
    match linear_report(&train, &train) {
        Ok(r) => push_metrics("linear", "train", &r),
        Err(e) => eprintln!("linear baseline skipped: {e}"),
    }
    if let Some(test) = &test {
        match linear_report(&train, test) {
            Ok(r) => push_metrics("linear", "test", &r),
            Err(e) => eprintln!("linear baseline skipped: {e}"),
        }
    }
    println!("BIC log base: {}", opts.bic_base);
    bic.emit(&args.out, "bic.csv", "kernel comparison (ascending BIC)")?;
    metrics.emit(&args.out, "metrics.csv", "accuracy")?;
    opt.write_csv(&args.out.join("optimization.csv"))?;
    if outcomes.iter().any(|o| o.ok().is_none()) {
        eprintln!("warning: some kernel families failed; see bic.csv");
    }
    Ok(())
}
