use gpcal_core::data::load_csv;
use gpcal_core::model_io::load_model;
use gpcal_core::{Error, Result};

use crate::pipeline::evaluate;
use crate::report::{num, report_cells, Table, REPORT_COLUMNS};
use crate::{check_level, create_out_dir, EvaluateArgs};

pub const PREDICTION_COLUMNS: [&str; 8] = [
    "index",
    "voltage",
    "air_temp",
    "truth",
    "mean",
    "predictive_std",
    "interval_low",
    "interval_high",
];

pub fn run(args: &EvaluateArgs) -> Result<()> {
    check_level(args.level)?;
    let model = load_model(&args.model)?;
    let data = load_csv(&args.data)?;
    if data.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} holds no records",
            args.data.display()
        )));
    }
    let (report, predictions) = evaluate(&model, &data, args.level)?;
    create_out_dir(&args.out)?;

    let mut t = Table::new(PREDICTION_COLUMNS);
    for (i, (rec, p)) in data.records.iter().zip(&predictions).enumerate() {
        t.push(vec![
            i.to_string(),
            num(rec.voltage),
            num(rec.air_temp),
            num(rec.wind_speed),
            num(p.mean),
            num(p.predictive_std()),
            num(p.interval_low),
            num(p.interval_high),
        ]);
    }
    t.write_csv(&args.out.join("predictions.csv"))?;

    let mut r = Table::new(std::iter::once("level").chain(REPORT_COLUMNS));
    r.push(
        std::iter::once(num(args.level))
            .chain(report_cells(&report))
            .collect(),
    );
    r.emit(&args.out, "eval_report.csv", "accuracy")?;
    println!("wrote {}", args.out.join("predictions.csv").display());
    Ok(())
}
