use gpcal_core::data::{self, split_pair};
use gpcal_core::model_io::save_model;
use gpcal_core::Result;

use super::{hyperparameter_table, optimization_table};
use crate::pipeline::{evaluate, train_model};
use crate::report::{report_cells, Table, REPORT_COLUMNS};
use crate::{create_out_dir, TrainArgs};

pub fn run(args: &TrainArgs) -> Result<()> {
    let opts = args.fit.options()?;
    let dataset = args.data.load()?;
    let (train, test) = match &args.split {
        Some(s) => {
            let pair = split_pair(&dataset, &s.single(args.fit.seed)?)?;
            (pair.train, Some(pair.test))
        }
        None => (dataset, None),
    };
    if train.len() < 10 {
        return Err(gpcal_core::Error::InvalidInput(format!(
            "training needs at least 10 records, got {}",
            train.len()
        )));
    }
    create_out_dir(&args.out)?;
    let fitted = train_model(&train, &opts)?;
    let model_path = args.out.join("model.gpcal");
    save_model(&fitted.model, &model_path)?;

    let mut report = Table::new(std::iter::once("dataset").chain(REPORT_COLUMNS));
    let (r, _) = evaluate(&fitted.model, &train, args.fit.level)?;
    report.push(
        std::iter::once("train".to_string())
            .chain(report_cells(&r))
            .collect(),
    );
    if let Some(test) = &test {
        data::save_csv(&train, args.out.join("train.csv"))?;
        data::save_csv(test, args.out.join("test.csv"))?;
        let (r, _) = evaluate(&fitted.model, test, args.fit.level)?;
        report.push(
            std::iter::once("test".to_string())
                .chain(report_cells(&r))
                .collect(),
        );
    }

    let family = fitted.model.kernel().family();
    hyperparameter_table(&fitted.model).emit(
        &args.out,
        "hyperparameters.csv",
        "hyperparameters",
    )?;
    optimization_table(family, &fitted.optimization).emit(
        &args.out,
        "optimization.csv",
        "optimizer restarts",
    )?;
    report.emit(&args.out, "train_report.csv", "accuracy")?;
    println!("wrote {}", model_path.display());
    Ok(())
}
