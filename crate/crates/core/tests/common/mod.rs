#![allow(dead_code)]

use gpcal_core::KernelSpec;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points uniform on the unit square.
pub fn unit_square(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>())
}

/// Naive dense covariance, entry by entry through `KernelSpec::eval`.
pub fn naive_cov(k: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        let xi: Vec<f64> = a.row(i).iter().copied().collect();
        let xj: Vec<f64> = b.row(j).iter().copied().collect();
        k.eval(&xi, &xj).unwrap()
    })
}

/// A draw of `f(X) + ε` from the GP prior with the given kernel and noise,
/// using nalgebra's own Cholesky.
pub fn gp_sample(
    k: &KernelSpec,
    noise_std: f64,
    x: &DMatrix<f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = x.nrows();
    let mut c = naive_cov(k, x, x);
    for i in 0..n {
        c[(i, i)] += noise_std * noise_std + 1e-12;
    }
    let l = c.cholesky().expect("prior covariance is SPD").l();
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    (l * z).iter().copied().collect()
}
