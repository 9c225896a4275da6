//! Stationary isotropic covariance functions.
//!
//! Every family is a function of the Euclidean distance `r` between two
//! inputs, scaled by a single length-scale `ℓ` and a signal variance `σf²`:
//!
//! | family               | k(r)                                        |
//! |----------------------|---------------------------------------------|
//! | squared exponential  | σf² · exp(−r² / 2ℓ²)                        |
//! | exponential          | σf² · exp(−r / ℓ)                           |
//! | Matérn 5/2           | σf² · (1 + √5 r/ℓ + 5r²/3ℓ²) · exp(−√5 r/ℓ) |
//! | rational quadratic   | σf² · (1 + r² / 2αℓ²)^(−α)                  |
//!
//! Hyperparameters are stored as natural logarithms; gradients are taken
//! with respect to those log values.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const SQRT_5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelFamily {
    SquaredExponential,
    Exponential,
    Matern52,
    RationalQuadratic,
}

impl KernelFamily {
    /// All families, in the order they are usually tabulated
    /// (rational quadratic, squared exponential, Matérn 5/2, exponential).
    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::RationalQuadratic,
        KernelFamily::SquaredExponential,
        KernelFamily::Matern52,
        KernelFamily::Exponential,
    ];

    /// Number of kernel hyperparameters, excluding the observation noise.
    pub fn num_params(self) -> usize {
        match self {
            KernelFamily::RationalQuadratic => 3,
            _ => 2,
        }
    }

    /// Short token used on the command line and in model files.
    pub fn token(self) -> &'static str {
        match self {
            KernelFamily::SquaredExponential => "se",
            KernelFamily::Exponential => "exp",
            KernelFamily::Matern52 => "matern52",
            KernelFamily::RationalQuadratic => "rq",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            KernelFamily::SquaredExponential => "Squared Exponential",
            KernelFamily::Exponential => "Exponential",
            KernelFamily::Matern52 => "Matern 5/2",
            KernelFamily::RationalQuadratic => "Rational Quadratic",
        }
    }

    /// Names of the log-hyperparameters in storage order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            KernelFamily::RationalQuadratic => &["signal_std", "length_scale", "shape_alpha"],
            _ => &["signal_std", "length_scale"],
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "se" | "squared_exponential" | "rbf" => Ok(KernelFamily::SquaredExponential),
            "exp" | "exponential" => Ok(KernelFamily::Exponential),
            "matern52" | "matern" => Ok(KernelFamily::Matern52),
            "rq" | "rational_quadratic" => Ok(KernelFamily::RationalQuadratic),
            other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// Kernel hyperparameters in natural units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperParams {
    /// Signal standard deviation σf (target units).
    pub signal_std: f64,
    /// Isotropic length-scale ℓ (normalized input units).
    pub length_scale: f64,
    /// Rational-quadratic shape α; ignored by the other families.
    pub shape_alpha: Option<f64>,
}

/// A covariance family together with its hyperparameters.
///
/// Immutable once constructed; all positivity checks happen in the
/// constructors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    log_params: [f64; 3],
}

impl KernelSpec {
    pub fn new(family: KernelFamily, params: HyperParams) -> Result<Self> {
        let mut natural = vec![params.signal_std, params.length_scale];
        if family == KernelFamily::RationalQuadratic {
            let alpha = params.shape_alpha.ok_or_else(|| {
                Error::input("rational quadratic kernel requires a shape parameter")
            })?;
            natural.push(alpha);
        }
        for (name, v) in family.param_names().iter().zip(&natural) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::input(format!(
                    "kernel hyperparameter {name} must be finite and > 0, got {v}"
                )));
            }
        }
        let logs: Vec<f64> = natural.iter().map(|v| v.ln()).collect();
        Self::from_log_params(family, &logs)
    }

    pub fn squared_exponential(signal_std: f64, length_scale: f64) -> Result<Self> {
        Self::two_param(KernelFamily::SquaredExponential, signal_std, length_scale)
    }

    pub fn exponential(signal_std: f64, length_scale: f64) -> Result<Self> {
        Self::two_param(KernelFamily::Exponential, signal_std, length_scale)
    }

    pub fn matern52(signal_std: f64, length_scale: f64) -> Result<Self> {
        Self::two_param(KernelFamily::Matern52, signal_std, length_scale)
    }

    pub fn rational_quadratic(
        signal_std: f64,
        length_scale: f64,
        shape_alpha: f64,
    ) -> Result<Self> {
        Self::new(
            KernelFamily::RationalQuadratic,
            HyperParams {
                signal_std,
                length_scale,
                shape_alpha: Some(shape_alpha),
            },
        )
    }

    fn two_param(family: KernelFamily, signal_std: f64, length_scale: f64) -> Result<Self> {
        Self::new(
            family,
            HyperParams {
                signal_std,
                length_scale,
                shape_alpha: None,
            },
        )
    }

    /// Builds a kernel from log-hyperparameters `[log σf, log ℓ, (log α)]`.
    pub fn from_log_params(family: KernelFamily, log_params: &[f64]) -> Result<Self> {
        if log_params.len() != family.num_params() {
            return Err(Error::input(format!(
                "{} kernel takes {} log-parameters, got {}",
                family.display_name(),
                family.num_params(),
                log_params.len()
            )));
        }
        let mut stored = [0.0; 3];
        for (i, (&lp, name)) in log_params.iter().zip(family.param_names()).enumerate() {
            let v = lp.exp();
            if !(lp.is_finite() && v > 0.0 && v.is_finite()) {
                return Err(Error::input(format!(
                    "kernel hyperparameter {name} out of range (log value {lp})"
                )));
            }
            stored[i] = lp;
        }
        Ok(KernelSpec {
            family,
            log_params: stored,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn num_params(&self) -> usize {
        self.family.num_params()
    }

    pub fn log_params(&self) -> &[f64] {
        &self.log_params[..self.family.num_params()]
    }

    pub fn params(&self) -> HyperParams {
        HyperParams {
            signal_std: self.signal_std(),
            length_scale: self.length_scale(),
            shape_alpha: (self.family == KernelFamily::RationalQuadratic)
                .then(|| self.log_params[2].exp()),
        }
    }

    pub fn signal_std(&self) -> f64 {
        self.log_params[0].exp()
    }

    pub fn length_scale(&self) -> f64 {
        self.log_params[1].exp()
    }

    /// Prior variance k(x, x) = σf².
    pub fn signal_variance(&self) -> f64 {
        (2.0 * self.log_params[0]).exp()
    }

    /// Covariance between two input vectors.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() || x.is_empty() {
            return Err(Error::input(format!(
                "kernel inputs must share a non-zero dimension, got {} and {}",
                x.len(),
                x2.len()
            )));
        }
        Ok(self.eval_sq_dist(sq_dist(x, x2)))
    }

    /// Covariance as a function of the squared distance.
    pub fn eval_sq_dist(&self, r2: f64) -> f64 {
        self.prepare().value(r2)
    }

    /// Parameters in natural units, for tight evaluation loops.
    pub(crate) fn prepare(&self) -> Prepared {
        let ell = self.length_scale();
        let alpha = self.log_params[2].exp();
        Prepared {
            family: self.family,
            sf2: self.signal_variance(),
            inv_ell: 1.0 / ell,
            inv_ell2: 1.0 / (ell * ell),
            alpha,
            inv_2a_ell2: 1.0 / (2.0 * alpha * ell * ell),
        }
    }

    /// Cross-covariance matrix between the rows of `x` and the rows of `x2`.
    pub fn eval_matrix(&self, x: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_cols(x, x2)?;
        let a = RowMajor::new(x);
        let b = RowMajor::new(x2);
        let kp = self.prepare();
        Ok(DMatrix::from_fn(x.nrows(), x2.nrows(), |i, j| {
            kp.value(sq_dist(a.row(i), b.row(j)))
        }))
    }

    /// Symmetric covariance K(X, X), evaluated on one triangle.
    pub fn gram(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() == 0 {
            return Err(Error::input("inputs must have at least one column"));
        }
        let n = x.nrows();
        let a = RowMajor::new(x);
        let mut k = DMatrix::zeros(n, n);
        let kp = self.prepare();
        for j in 0..n {
            k[(j, j)] = kp.sf2;
            for i in (j + 1)..n {
                let v = kp.value(sq_dist(a.row(i), a.row(j)));
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// ∂K(X, X)/∂(log θ_p) for every kernel log-parameter `p`.
    pub fn grad_matrices(&self, x: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        self.gram_with_grads(x).map(|(_, g)| g)
    }

    /// K(X, X) together with its log-parameter derivatives, sharing the
    /// distance computations.
    pub fn gram_with_grads(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::input("inputs must be non-empty"));
        }
        let n = x.nrows();
        let p = self.num_params();
        let a = RowMajor::new(x);
        let mut k = DMatrix::zeros(n, n);
        let mut grads = vec![DMatrix::zeros(n, n); p];
        let mut g = [0.0; 3];
        let kp = self.prepare();
        for j in 0..n {
            for i in j..n {
                let r2 = if i == j {
                    0.0
                } else {
                    sq_dist(a.row(i), a.row(j))
                };
                let v = kp.value_and_grad(r2, &mut g[..p]);
                k[(i, j)] = v;
                k[(j, i)] = v;
                for (m, gv) in grads.iter_mut().zip(&g[..p]) {
                    m[(i, j)] = *gv;
                    m[(j, i)] = *gv;
                }
            }
        }
        Ok((k, grads))
    }
}

fn check_cols(x: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<()> {
    if x.ncols() != x2.ncols() || x.ncols() == 0 {
        return Err(Error::input(format!(
            "input dimension mismatch: {} vs {} columns",
            x.ncols(),
            x2.ncols()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Prepared {
    family: KernelFamily,
    sf2: f64,
    inv_ell: f64,
    inv_ell2: f64,
    alpha: f64,
    inv_2a_ell2: f64,
}

impl Prepared {
    #[inline]
    pub(crate) fn value(&self, r2: f64) -> f64 {
        let sf2 = self.sf2;
        match self.family {
            KernelFamily::SquaredExponential => sf2 * (-0.5 * r2 * self.inv_ell2).exp(),
            KernelFamily::Exponential => sf2 * (-r2.sqrt() * self.inv_ell).exp(),
            KernelFamily::Matern52 => {
                let s = SQRT_5 * r2.sqrt() * self.inv_ell;
                sf2 * (1.0 + s + s * s / 3.0) * (-s).exp()
            }
            KernelFamily::RationalQuadratic => {
                sf2 * (-self.alpha * (r2 * self.inv_2a_ell2).ln_1p()).exp()
            }
        }
    }

    /// Covariance and its derivatives with respect to each log-parameter,
    /// written into `grad` (length `num_params`).
    #[inline]
    pub(crate) fn value_and_grad(&self, r2: f64, grad: &mut [f64]) -> f64 {
        let sf2 = self.sf2;
        let k;
        match self.family {
            KernelFamily::SquaredExponential => {
                let q = r2 * self.inv_ell2;
                k = sf2 * (-0.5 * q).exp();
                grad[1] = k * q;
            }
            KernelFamily::Exponential => {
                let q = r2.sqrt() * self.inv_ell;
                k = sf2 * (-q).exp();
                grad[1] = k * q;
            }
            KernelFamily::Matern52 => {
                let s = SQRT_5 * r2.sqrt() * self.inv_ell;
                let e = (-s).exp();
                k = sf2 * (1.0 + s + s * s / 3.0) * e;
                grad[1] = sf2 * e * s * s * (1.0 + s) / 3.0;
            }
            KernelFamily::RationalQuadratic => {
                let v = r2 * self.inv_2a_ell2;
                k = sf2 * (-self.alpha * v.ln_1p()).exp();
                grad[1] = k * r2 * self.inv_ell2 / (1.0 + v);
                grad[2] = k * self.alpha * rq_shape_term(v);
            }
        }
        grad[0] = 2.0 * k;
        k
    }
}

/// `v/(1+v) − ln(1+v)`, which cancels to `−v²/2` for small `v`.
#[inline]
fn rq_shape_term(v: f64) -> f64 {
    if v < 1e-3 {
        // alternating series Σ (−1)^(k+1) (k−1)/k · v^k, k ≥ 2
        let v2 = v * v;
        v2 * (-0.5 + v * (2.0 / 3.0 + v * (-0.75 + v * (0.8 + v * (-5.0 / 6.0)))))
    } else {
        v / (1.0 + v) - v.ln_1p()
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Row-major copy of a matrix so that rows are contiguous slices.
pub(crate) struct RowMajor {
    data: Vec<f64>,
    cols: usize,
}

impl RowMajor {
    pub(crate) fn new(m: &DMatrix<f64>) -> Self {
        let cols = m.ncols();
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter());
        }
        RowMajor { data, cols }
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}
