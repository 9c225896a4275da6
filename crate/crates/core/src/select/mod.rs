//! Model assessment: error metrics, BIC kernel comparison and a linear
//! least-squares baseline.

mod bic;
mod compare;
mod linear;
mod metrics;

pub use bic::{bic, BicRow, LogBase};
pub use compare::{compare_kernels, FamilyOutcome, KernelComparison};
pub use linear::{linear_baseline_fit, linear_baseline_predict, LinearModel};
pub use metrics::{coverage, mae, r_squared, rmse, sum_squared_residuals, EvalReport};
