use crate::error::{Error, Result};
use crate::gp::{credible_interval, Prediction};

fn check_pair(truth: &[f64], pred: &[f64]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::input("metrics need at least one sample"));
    }
    if truth.len() != pred.len() {
        return Err(Error::input(format!(
            "length mismatch: {} truths vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_pair(truth, pred)?;
    let s: f64 = truth.iter().zip(pred).map(|(y, p)| (y - p).abs()).sum();
    Ok(s / truth.len() as f64)
}

pub fn sum_squared_residuals(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_pair(truth, pred)?;
    Ok(truth.iter().zip(pred).map(|(y, p)| (y - p) * (y - p)).sum())
}

/// Root mean squared error.
pub fn rmse(truth: &[f64], pred: &[f64]) -> Result<f64> {
    Ok((sum_squared_residuals(truth, pred)? / truth.len() as f64).sqrt())
}

/// Coefficient of determination, `1 − SSres / SStot`. Unbounded below.
pub fn r_squared(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_pair(truth, pred)?;
    if truth.len() < 2 {
        return Err(Error::input("R² needs at least two samples"));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(1.0 - sum_squared_residuals(truth, pred)? / ss_tot)
}

/// Fraction of truths inside the credible interval at `level`.
pub fn coverage(truth: &[f64], predictions: &[Prediction], level: f64) -> Result<f64> {
    if truth.len() != predictions.len() {
        return Err(Error::input(format!(
            "length mismatch: {} truths vs {} predictions",
            truth.len(),
            predictions.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::input("coverage needs at least one sample"));
    }
    let mut inside = 0usize;
    for (y, p) in truth.iter().zip(predictions) {
        let (lo, hi) = credible_interval(p, level)?;
        if lo <= *y && *y <= hi {
            inside += 1;
        }
    }
    Ok(inside as f64 / truth.len() as f64)
}

/// Accuracy summary for one experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    /// NaN when no interval information is available (e.g. linear baseline).
    pub coverage: f64,
    pub n: usize,
}

impl EvalReport {
    /// Point metrics only.
    pub fn from_point_predictions(truth: &[f64], pred: &[f64]) -> Result<Self> {
        Ok(EvalReport {
            mae: mae(truth, pred)?,
            rmse: rmse(truth, pred)?,
            r2: r_squared(truth, pred)?,
            coverage: f64::NAN,
            n: truth.len(),
        })
    }

    pub fn from_predictions(truth: &[f64], predictions: &[Prediction], level: f64) -> Result<Self> {
        let means: Vec<f64> = predictions.iter().map(|p| p.mean).collect();
        Ok(EvalReport {
            coverage: coverage(truth, predictions, level)?,
            ..Self::from_point_predictions(truth, &means)?
        })
    }
}
