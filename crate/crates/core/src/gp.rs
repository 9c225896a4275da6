//! Exact Gaussian-process regression.
//!
//! Targets are centered on their training mean before fitting, so the
//! zero-mean prior applies to deviations from that mean. With
//! `K_y = K(X, X) + σn²·I = L·Lᵀ`:
//!
//! * posterior mean   `f̄* = k*ᵀ α + ȳ`, with `α = K_y⁻¹ (y − ȳ)`
//! * latent variance  `k(x*, x*) − ‖L⁻¹ k*‖²`
//! * log evidence     `−½ yᵀα − Σ log L_ii − (n/2) log 2π`

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{CalibrationDataset, NormalizationTransform};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::Cholesky;

/// Default credible level for intervals attached to predictions.
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Round-off allowance (relative to σf²) below which a negative posterior
/// variance is clamped to zero.
pub const VARIANCE_CLAMP: f64 = 1e-9;

/// Test points are processed in blocks of this many columns.
const PREDICT_BLOCK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Posterior variance of the latent function.
    pub latent_var: f64,
    /// `latent_var + σn²`.
    pub predictive_var: f64,
    pub interval_low: f64,
    pub interval_high: f64,
}

impl Prediction {
    pub fn predictive_std(&self) -> f64 {
        self.predictive_var.sqrt()
    }
}

/// Two-sided standard-normal quantile: `P(|Z| ≤ z) = level`.
pub fn z_score(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::input(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    let std_normal = Normal::standard();
    Ok(std_normal.inverse_cdf(0.5 + 0.5 * level))
}

/// `mean ∓ z(level)·sqrt(predictive_var)`.
pub fn credible_interval(p: &Prediction, level: f64) -> Result<(f64, f64)> {
    let half = z_score(level)? * p.predictive_var.max(0.0).sqrt();
    Ok((p.mean - half, p.mean + half))
}

/// The three terms of the log marginal likelihood.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmlTerms {
    /// `−½ yᵀ K_y⁻¹ y`
    pub data_fit: f64,
    /// `−½ log |K_y|`
    pub complexity: f64,
    /// `−(n/2) log 2π`
    pub normalization: f64,
}

impl LmlTerms {
    pub fn total(&self) -> f64 {
        self.data_fit + self.complexity + self.normalization
    }
}

fn validate(x: &DMatrix<f64>, y: &[f64], noise_std: f64) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::input("training inputs must be non-empty"));
    }
    if x.nrows() != y.len() {
        return Err(Error::input(format!(
            "{} input rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::input(
            "training data contains NaN or infinite values",
        ));
    }
    if !(noise_std.is_finite() && noise_std > 0.0) {
        return Err(Error::input(format!(
            "noise_std must be finite and > 0, got {noise_std}"
        )));
    }
    Ok(())
}

fn center(y: &[f64]) -> (Vec<f64>, f64) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| v - mean).collect(), mean)
}

fn noisy_gram(x: &DMatrix<f64>, kernel: &KernelSpec, noise_std: f64) -> Result<DMatrix<f64>> {
    let mut k = kernel.gram(x)?;
    let s2 = noise_std * noise_std;
    for i in 0..k.nrows() {
        k[(i, i)] += s2;
    }
    Ok(k)
}

fn terms_from(chol: &Cholesky, yc: &[f64], alpha: &[f64]) -> LmlTerms {
    let n = yc.len() as f64;
    let fit: f64 = yc.iter().zip(alpha).map(|(a, b)| a * b).sum();
    LmlTerms {
        data_fit: -0.5 * fit,
        complexity: -0.5 * chol.log_det(),
        normalization: -0.5 * n * (2.0 * PI).ln(),
    }
}

/// An immutable fitted GP.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    train_inputs: DMatrix<f64>,
    kernel: KernelSpec,
    noise_std: f64,
    chol: Cholesky,
    alpha: Vec<f64>,
    target_offset: f64,
    input_transform: Option<NormalizationTransform>,
    log_marginal: f64,
}

/// Fits a GP to inputs `x` (n×N, normalized units) and targets `y`.
pub fn fit(
    x: &DMatrix<f64>,
    y: &[f64],
    kernel: KernelSpec,
    noise_std: f64,
) -> Result<TrainedModel> {
    validate(x, y, noise_std)?;
    let (yc, offset) = center(y);
    let chol = Cholesky::new(&noisy_gram(x, &kernel, noise_std)?)?;
    let alpha = chol.solve(&yc);
    let log_marginal = terms_from(&chol, &yc, &alpha).total();
    Ok(TrainedModel {
        train_inputs: x.clone(),
        kernel,
        noise_std,
        chol,
        alpha,
        target_offset: offset,
        input_transform: None,
        log_marginal,
    })
}

impl TrainedModel {
    /// Reassembles a model from stored parts, refactorizing with the
    /// recorded jitter.
    pub(crate) fn from_parts(
        train_inputs: DMatrix<f64>,
        kernel: KernelSpec,
        noise_std: f64,
        jitter: f64,
        alpha: Vec<f64>,
        target_offset: f64,
        input_transform: Option<NormalizationTransform>,
        log_marginal: f64,
    ) -> Result<Self> {
        if alpha.len() != train_inputs.nrows() {
            return Err(Error::Format(format!(
                "alpha has {} entries for {} training rows",
                alpha.len(),
                train_inputs.nrows()
            )));
        }
        let gram = noisy_gram(&train_inputs, &kernel, noise_std)?;
        let chol = Cholesky::with_jitter(&gram, jitter)?;
        Ok(TrainedModel {
            train_inputs,
            kernel,
            noise_std,
            chol,
            alpha,
            target_offset,
            input_transform,
            log_marginal,
        })
    }

    /// Attaches the raw-input normalization used to build the training
    /// matrix, enabling [`predict_dataset`](Self::predict_dataset).
    pub fn with_transform(mut self, transform: NormalizationTransform) -> Self {
        self.input_transform = Some(transform);
        self
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    pub fn train_inputs(&self) -> &DMatrix<f64> {
        &self.train_inputs
    }

    pub fn n_train(&self) -> usize {
        self.train_inputs.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.train_inputs.ncols()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn target_offset(&self) -> f64 {
        self.target_offset
    }

    pub fn input_transform(&self) -> Option<&NormalizationTransform> {
        self.input_transform.as_ref()
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    /// Diagonal jitter the factorization needed (0 when none).
    pub fn jitter(&self) -> f64 {
        self.chol.jitter()
    }

    /// Lower-triangular factor of `K_y`.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.lower()
    }

    fn check_dim(&self, xstar: &DMatrix<f64>) -> Result<()> {
        if xstar.ncols() != self.input_dim() {
            return Err(Error::input(format!(
                "model expects {} input columns, got {}",
                self.input_dim(),
                xstar.ncols()
            )));
        }
        if xstar.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("test inputs contain NaN or infinite values"));
        }
        Ok(())
    }

    /// Predictions at the rows of `xstar` (normalized units) with
    /// intervals at [`DEFAULT_LEVEL`].
    pub fn predict(&self, xstar: &DMatrix<f64>) -> Result<Vec<Prediction>> {
        self.predict_at_level(xstar, DEFAULT_LEVEL)
    }

    pub fn predict_at_level(&self, xstar: &DMatrix<f64>, level: f64) -> Result<Vec<Prediction>> {
        self.check_dim(xstar)?;
        let z = z_score(level)?;
        let prior = self.kernel.signal_variance();
        let tol = VARIANCE_CLAMP * prior.max(1.0);
        let noise_var = self.noise_var();
        let alpha = DVector::from_column_slice(&self.alpha);

        let mut out = Vec::with_capacity(xstar.nrows());
        let mut start = 0;
        while start < xstar.nrows() {
            let len = PREDICT_BLOCK.min(xstar.nrows() - start);
            let block = xstar.rows(start, len).into_owned();
            let kstar = self.kernel.eval_matrix(&self.train_inputs, &block)?;
            let means = kstar.tr_mul(&alpha);
            let reduction = self.chol.quad_forms(&kstar);
            for j in 0..len {
                let mut latent = prior - reduction[j];
                if latent < 0.0 {
                    if latent < -tol {
                        return Err(Error::NumericalFailure {
                            reason: format!("negative posterior variance {latent:e}"),
                            jitter: self.jitter(),
                        });
                    }
                    latent = 0.0;
                }
                let mean = means[j] + self.target_offset;
                let predictive_var = latent + noise_var;
                let half = z * predictive_var.sqrt();
                out.push(Prediction {
                    mean,
                    latent_var: latent,
                    predictive_var,
                    interval_low: mean - half,
                    interval_high: mean + half,
                });
            }
            start += len;
        }
        Ok(out)
    }

    /// Full posterior covariance of the latent function at `xstar`.
    pub fn predict_covariance(&self, xstar: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(xstar)?;
        let kss = self.kernel.gram(xstar)?;
        let v = self
            .chol
            .solve_lower(&self.kernel.eval_matrix(&self.train_inputs, xstar)?);
        Ok(kss - v.tr_mul(&v))
    }

    /// Predictions for raw records, using the attached normalization.
    pub fn predict_dataset(
        &self,
        data: &CalibrationDataset,
        level: f64,
    ) -> Result<Vec<Prediction>> {
        let t = self
            .input_transform
            .as_ref()
            .ok_or_else(|| Error::input("model has no input normalization attached"))?;
        if data.is_empty() {
            return Err(Error::input("cannot predict on an empty dataset"));
        }
        self.predict_at_level(&t.normalize_inputs(&data.raw_inputs()), level)
    }
}

/// Log marginal likelihood split into its three terms, for targets that
/// are already centered.
pub fn log_marginal_terms_centered(
    x: &DMatrix<f64>,
    yc: &[f64],
    kernel: &KernelSpec,
    noise_std: f64,
) -> Result<LmlTerms> {
    validate(x, yc, noise_std)?;
    let chol = Cholesky::new(&noisy_gram(x, kernel, noise_std)?)?;
    let alpha = chol.solve(yc);
    Ok(terms_from(&chol, yc, &alpha))
}

/// Log marginal likelihood terms after centering `y` on its mean.
pub fn log_marginal_terms(
    x: &DMatrix<f64>,
    y: &[f64],
    kernel: &KernelSpec,
    noise_std: f64,
) -> Result<LmlTerms> {
    validate(x, y, noise_std)?;
    let (yc, _) = center(y);
    log_marginal_terms_centered(x, &yc, kernel, noise_std)
}

/// `log p(y | X, θ)` on mean-centered targets.
pub fn log_marginal_likelihood(
    x: &DMatrix<f64>,
    y: &[f64],
    kernel: &KernelSpec,
    noise_std: f64,
) -> Result<f64> {
    log_marginal_terms(x, y, kernel, noise_std).map(|t| t.total())
}

/// Value and gradient of the log marginal likelihood for centered targets.
///
/// The gradient is taken with respect to the kernel log-parameters followed
/// by `log σn`. See [`MarginalLikelihood`].
pub fn log_marginal_and_gradient_centered(
    x: &DMatrix<f64>,
    yc: &[f64],
    kernel: &KernelSpec,
    noise_std: f64,
) -> Result<(f64, Vec<f64>)> {
    MarginalLikelihood::centered(x, yc)?.value_and_gradient(kernel, noise_std)
}

/// Log marginal likelihood of fixed training data as a function of the
/// hyperparameters. Pairwise squared distances are computed once, so
/// repeated evaluations during optimization only pay for the kernel
/// values, the factorization and the inverse.
#[derive(Clone, Debug)]
pub struct MarginalLikelihood {
    n: usize,
    /// Lower triangle of the squared-distance matrix, column by column.
    r2: Vec<f64>,
    yc: Vec<f64>,
}

impl MarginalLikelihood {
    /// Centers `y` on its mean.
    pub fn new(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        validate(x, y, 1.0)?;
        Self::centered(x, &center(y).0)
    }

    /// Uses `yc` as given.
    pub fn centered(x: &DMatrix<f64>, yc: &[f64]) -> Result<Self> {
        validate(x, yc, 1.0)?;
        let n = yc.len();
        let rows = crate::kernels::RowMajor::new(x);
        let mut r2 = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            r2.push(0.0);
            for i in (j + 1)..n {
                r2.push(crate::kernels::sq_dist(rows.row(i), rows.row(j)));
            }
        }
        Ok(MarginalLikelihood {
            n,
            r2,
            yc: yc.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn factor(&self, kernel: &KernelSpec, noise_std: f64) -> Result<Cholesky> {
        if !(noise_std.is_finite() && noise_std > 0.0) {
            return Err(Error::input(format!(
                "noise_std must be finite and > 0, got {noise_std}"
            )));
        }
        let s2 = noise_std * noise_std;
        let kp = kernel.prepare();
        Cholesky::from_lower_fill(self.n, |k| {
            let mut at = 0;
            for j in 0..self.n {
                let col = k.col_as_slice_mut(j);
                for c in &mut col[j..] {
                    *c = kp.value(self.r2[at]);
                    at += 1;
                }
                col[j] += s2;
            }
        })
    }

    pub fn value(&self, kernel: &KernelSpec, noise_std: f64) -> Result<f64> {
        let chol = self.factor(kernel, noise_std)?;
        let alpha = chol.solve(&self.yc);
        Ok(terms_from(&chol, &self.yc, &alpha).total())
    }

    /// `½ tr((ααᵀ − K_y⁻¹) ∂K_y/∂θ)` for every log-parameter, accumulated
    /// over the lower triangle without forming the derivative matrices.
    pub fn value_and_gradient(
        &self,
        kernel: &KernelSpec,
        noise_std: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let n = self.n;
        let chol = self.factor(kernel, noise_std)?;
        let alpha = chol.solve(&self.yc);
        let value = terms_from(&chol, &self.yc, &alpha).total();
        let kinv = chol.inverse_lower();

        let p = kernel.num_params();
        let mut acc = [0.0; 3];
        let mut g = [0.0; 3];
        let kp = kernel.prepare();
        let mut at = 0;
        let mut trace = 0.0;
        for j in 0..n {
            let col = &kinv.col_as_slice(j)[j..];
            let aj = alpha[j];
            trace += col[0];
            for (off, kv) in col.iter().enumerate() {
                let i = j + off;
                kp.value_and_grad(self.r2[at], &mut g[..p]);
                at += 1;
                let w = alpha[i] * aj - kv;
                let w = if off == 0 { 0.5 * w } else { w };
                for q in 0..p {
                    acc[q] += w * g[q];
                }
            }
        }
        let s2 = noise_std * noise_std;
        let aa: f64 = alpha.iter().map(|a| a * a).sum();
        let mut grad: Vec<f64> = acc[..p].to_vec();
        grad.push(s2 * (aa - trace));
        Ok((value, grad))
    }
}

/// Gradient of [`log_marginal_likelihood`] with respect to
/// `[log kernel params..., log σn]`.
pub fn log_marginal_gradient(
    x: &DMatrix<f64>,
    y: &[f64],
    kernel: &KernelSpec,
    noise_std: f64,
) -> Result<Vec<f64>> {
    validate(x, y, noise_std)?;
    let (yc, _) = center(y);
    log_marginal_and_gradient_centered(x, &yc, kernel, noise_std).map(|(_, g)| g)
}
