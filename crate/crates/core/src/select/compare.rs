use rayon::prelude::*;

use crate::data::{CalibrationDataset, NormalizationTransform};
use crate::error::{Error, Result};
use crate::gp::{fit, TrainedModel, DEFAULT_LEVEL};
use crate::kernels::KernelFamily;
use crate::optimize::{optimize_hyperparameters, OptimizeConfig, OptimizeResult};
use crate::select::{BicRow, EvalReport, LogBase};

/// A fitted, scored kernel family.
#[derive(Clone, Debug)]
pub struct KernelComparison {
    pub row: BicRow,
    /// In-sample metrics on the comparison dataset.
    pub report: EvalReport,
    pub optimization: OptimizeResult,
    pub model: TrainedModel,
}

/// Result for one requested family; failures are kept rather than aborting
/// the whole comparison.
#[derive(Debug)]
pub struct FamilyOutcome {
    pub family: KernelFamily,
    /// Position of the family in the request.
    pub index: usize,
    pub result: Result<KernelComparison>,
}

impl FamilyOutcome {
    pub fn ok(&self) -> Option<&KernelComparison> {
        self.result.as_ref().ok()
    }
}

fn score(
    x: &nalgebra::DMatrix<f64>,
    y: &[f64],
    family: KernelFamily,
    transform: NormalizationTransform,
    config: &OptimizeConfig,
    base: LogBase,
) -> Result<KernelComparison> {
    let optimization = optimize_hyperparameters(x, y, family, config)?;
    let model = fit(x, y, optimization.kernel, optimization.noise_std)?.with_transform(transform);
    let row = BicRow::new(family, model.log_marginal(), y.len(), base);
    let predictions = model.predict(x)?;
    let report = EvalReport::from_predictions(y, &predictions, DEFAULT_LEVEL)?;
    Ok(KernelComparison {
        row,
        report,
        optimization,
        model,
    })
}

/// Optimizes, fits and scores every family on the whole dataset (inputs
/// normalized by the dataset's own range). Successful rows come first in
/// ascending BIC order, then failures in request order.
pub fn compare_kernels(
    dataset: &CalibrationDataset,
    families: &[KernelFamily],
    config: &OptimizeConfig,
    base: LogBase,
) -> Result<Vec<FamilyOutcome>> {
    if families.is_empty() {
        return Err(Error::Config("no kernel families to compare".into()));
    }
    config.validate()?;
    let transform = NormalizationTransform::fit(dataset)?;
    let (x, y) = transform.normalize(dataset);
    let mut out: Vec<FamilyOutcome> = families
        .par_iter()
        .enumerate()
        .map(|(index, &family)| FamilyOutcome {
            family,
            index,
            result: score(&x, &y, family, transform, config, base),
        })
        .collect();
    out.sort_by(|a, b| match (a.ok(), b.ok()) {
        (Some(p), Some(q)) => p.row.bic.total_cmp(&q.row.bic).then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    Ok(out)
}
