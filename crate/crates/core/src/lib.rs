//! Hot-wire anemometer calibration with exact Gaussian-process regression.
//!
//! The crate covers the full pipeline: covariance kernels with analytic
//! hyperparameter gradients ([`kernels`]), exact inference ([`gp`]),
//! marginal-likelihood optimization ([`optimize`]), metrics, BIC and a
//! linear baseline ([`select`]), and dataset handling including a synthetic
//! King's-law generator ([`data`]). Fitted models persist through
//! [`model_io`].
//!
//! ```
//! use gpcal_core::{data, gp, kernels::KernelSpec};
//!
//! let ds = data::synthesize(&data::SynthConfig { speed_steps: 6, samples_per_step: 1, ..Default::default() })?;
//! let t = data::NormalizationTransform::fit(&ds)?;
//! let (x, y) = t.normalize(&ds);
//! let model = gp::fit(&x, &y, KernelSpec::squared_exponential(5.0, 0.5)?, 0.1)?;
//! let pred = model.predict(&x)?;
//! assert_eq!(pred.len(), ds.len());
//! # Ok::<(), gpcal_core::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod model_io;
pub mod optimize;
pub mod select;

pub use error::{Error, ErrorKind, Result};
pub use gp::{fit, Prediction, TrainedModel};
pub use kernels::{HyperParams, KernelFamily, KernelSpec};
pub use optimize::{optimize_hyperparameters, OptimizeConfig, OptimizeResult};
pub use select::{EvalReport, LogBase};

/// Formats a float with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
