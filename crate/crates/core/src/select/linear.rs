use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordinary least-squares fit `y ≈ X·w + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    /// One weight per input column, followed by the intercept.
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn weights(&self) -> &[f64] {
        &self.coefficients[..self.coefficients.len() - 1]
    }

    pub fn intercept(&self) -> f64 {
        *self.coefficients.last().expect("intercept present")
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        linear_baseline_predict(self, x)
    }
}

/// Least squares with intercept through a Householder QR of the design.
pub fn linear_baseline_fit(x: &DMatrix<f64>, y: &[f64]) -> Result<LinearModel> {
    let (n, p) = x.shape();
    if n != y.len() {
        return Err(Error::input(format!(
            "{n} input rows but {} targets",
            y.len()
        )));
    }
    if n <= p {
        return Err(Error::input(format!("need more than {p} samples, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::input(
            "linear baseline data contains NaN or infinite values",
        ));
    }
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j < p { x[(i, j)] } else { 1.0 });
    let qr = design.qr();
    let r = qr.r();
    let scale = (0..=p).fold(0.0f64, |m, i| m.max(r[(i, i)].abs()));
    for i in 0..=p {
        if !(r[(i, i)].abs() > 1e-12 * scale) {
            return Err(Error::DegenerateDesign(format!(
                "design matrix is rank deficient (column {i})"
            )));
        }
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::DegenerateDesign("singular triangular factor".into()))?;
    Ok(LinearModel {
        coefficients: beta.iter().copied().collect(),
    })
}

pub fn linear_baseline_predict(model: &LinearModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let p = model.coefficients.len() - 1;
    if x.ncols() != p {
        return Err(Error::input(format!(
            "model has {p} inputs, data has {} columns",
            x.ncols()
        )));
    }
    let w = model.weights();
    Ok(x.row_iter()
        .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + model.intercept())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::select::r_squared;

    #[test]
    fn exact_line() {
        let x = DMatrix::from_fn(10, 1, |i, _| i as f64 * 0.3);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = linear_baseline_fit(&x, &y).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((m.coefficients[1] - 1.0).abs() < 1e-10);
        let pred = m.predict(&x).unwrap();
        assert!(pred.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn beats_mean_predictor_in_sample() {
        let x = DMatrix::from_fn(30, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let y: Vec<f64> = (0..30).map(|i| ((i * 13) % 7) as f64 - x[(i, 0)]).collect();
        let m = linear_baseline_fit(&x, &y).unwrap();
        assert!(r_squared(&y, &m.predict(&x).unwrap()).unwrap() >= -1e-12);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let x = DMatrix::from_fn(8, 2, |i, j| if j == 0 { i as f64 } else { 2.0 * i as f64 });
        let y = vec![1.0; 8];
        assert!(matches!(
            linear_baseline_fit(&x, &y),
            Err(Error::DegenerateDesign(_))
        ));
        let constant = DMatrix::from_element(8, 1, 3.0);
        assert!(matches!(
            linear_baseline_fit(&constant, &y),
            Err(Error::DegenerateDesign(_))
        ));
        assert!(linear_baseline_fit(&DMatrix::zeros(1, 1), &[1.0]).is_err());
    }
}
