mod common;

use common::{gp_sample, naive_cov, rng, unit_square};
use gpcal_core::gp::{log_marginal_likelihood, log_marginal_terms};
use gpcal_core::{fit, KernelFamily, KernelSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn kernel(family: KernelFamily, sf: f64, ell: f64) -> KernelSpec {
    let mut lp = vec![sf.ln(), ell.ln()];
    if family == KernelFamily::RationalQuadratic {
        lp.push(1.5f64.ln());
    }
    KernelSpec::from_log_params(family, &lp).unwrap()
}

/// Mean and latent variance from `K_y⁻¹` formed explicitly.
fn naive_predict(
    k: &KernelSpec,
    noise: f64,
    x: &DMatrix<f64>,
    y: &[f64],
    xs: &DMatrix<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows();
    let offset = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - offset));
    let ky = naive_cov(k, x, x) + DMatrix::identity(n, n) * (noise * noise);
    let inv = ky.try_inverse().unwrap();
    let ks = naive_cov(k, x, xs);
    let kss = naive_cov(k, xs, xs);
    let mean = ks.transpose() * (&inv * yc);
    let cov = kss - ks.transpose() * &inv * &ks;
    (
        mean.iter().map(|m| m + offset).collect(),
        (0..xs.nrows()).map(|i| cov[(i, i)]).collect(),
    )
}

#[test]
fn triangular_solves_match_explicit_inverse() {
    let mut r = rng(11);
    for case in 0..40 {
        let family = KernelFamily::ALL[case % 4];
        let n = r.random_range(2..=50);
        let x = unit_square(n, &mut r);
        let xs = unit_square(25, &mut r);
        let k = kernel(family, r.random_range(0.3..3.0), r.random_range(0.1..1.0));
        let noise = r.random_range(0.05..0.5);
        let y = gp_sample(&k, noise, &x, &mut r);
        let model = fit(&x, &y, k, noise).unwrap();
        let preds = model.predict(&xs).unwrap();
        let (mean, var) = naive_predict(&k, noise, &x, &y, &xs);
        for (j, p) in preds.iter().enumerate() {
            assert!(
                (p.mean - mean[j]).abs() <= 1e-8,
                "case {case}: mean {} vs {}",
                p.mean,
                mean[j]
            );
            assert!(
                (p.latent_var - var[j].max(0.0)).abs() <= 1e-8,
                "case {case}: var {} vs {}",
                p.latent_var,
                var[j]
            );
            assert!(p.predictive_var >= p.latent_var);
        }
    }
}

#[test]
fn factor_and_weights_reconstruct_training_system() {
    let mut r = rng(12);
    for family in KernelFamily::ALL {
        let x = unit_square(40, &mut r);
        let k = kernel(family, 1.3, 0.4);
        let y = gp_sample(&k, 0.1, &x, &mut r);
        let model = fit(&x, &y, k, 0.1).unwrap();
        let ky = naive_cov(&k, &x, &x) + DMatrix::identity(40, 40) * 0.01;
        let l = model.chol_factor();
        let rel = (&l * l.transpose() - &ky).norm() / ky.norm();
        assert!(rel <= 1e-8, "{family:?}: {rel}");
        let yc = DVector::from_iterator(40, y.iter().map(|v| v - model.target_offset()));
        let back = &ky * DVector::from_column_slice(model.alpha());
        assert!((back - &yc).norm() <= 1e-8 * yc.norm());
    }
}

#[test]
fn marginal_likelihood_terms_sum_to_total_and_match_naive_value() {
    let mut r = rng(13);
    for family in KernelFamily::ALL {
        let x = unit_square(30, &mut r);
        let k = kernel(family, 0.8, 0.3);
        let y = gp_sample(&k, 0.2, &x, &mut r);
        let terms = log_marginal_terms(&x, &y, &k, 0.2).unwrap();
        let total = log_marginal_likelihood(&x, &y, &k, 0.2).unwrap();
        assert!((terms.total() - total).abs() <= 1e-12 * total.abs().max(1.0));

        let mean = y.iter().sum::<f64>() / 30.0;
        let yc = DVector::from_iterator(30, y.iter().map(|v| v - mean));
        let ky = naive_cov(&k, &x, &x) + DMatrix::identity(30, 30) * 0.04;
        let naive = -0.5 * yc.dot(&(ky.clone().try_inverse().unwrap() * &yc))
            - 0.5 * ky.determinant().ln()
            - 15.0 * (2.0 * std::f64::consts::PI).ln();
        assert!(
            (naive - total).abs() <= 1e-8 * total.abs().max(1.0),
            "{naive} vs {total}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn latent_variance_bounded_by_prior(
        fam in 0usize..4, sf in 0.1f64..10.0, ell in 0.05f64..2.0, noise in 0.01f64..1.0,
        pts in proptest::collection::vec(0.0f64..1.0, 2..60),
        probe in proptest::collection::vec(-0.5f64..1.5, 20),
    ) {
        let n = pts.len() / 2;
        let x = DMatrix::from_row_slice(n, 2, &pts[..2 * n]);
        let y: Vec<f64> = (0..n).map(|i| (3.0 * pts[2 * i]).sin()).collect();
        let k = kernel(KernelFamily::ALL[fam], sf, ell);
        let model = fit(&x, &y, k, noise).unwrap();
        let xs = DMatrix::from_row_slice(10, 2, &probe);
        for p in model.predict(&xs).unwrap() {
            prop_assert!(p.latent_var >= 0.0);
            prop_assert!(p.latent_var <= sf * sf + 1e-9);
            prop_assert!(p.interval_low <= p.mean && p.mean <= p.interval_high);
        }
    }

    #[test]
    fn adding_a_point_never_increases_latent_variance(
        fam in 0usize..4, sf in 0.2f64..3.0, ell in 0.05f64..1.0, noise in 0.02f64..0.5,
        pts in proptest::collection::vec(0.0f64..1.0, 4..40),
        extra in proptest::collection::vec(0.0f64..1.0, 2),
        probe in proptest::collection::vec(0.0f64..1.0, 10),
    ) {
        let n = pts.len() / 2;
        let x = DMatrix::from_row_slice(n, 2, &pts[..2 * n]);
        let y = vec![0.0; n];
        let x_more = x.clone().insert_row(n, 0.0);
        let mut x_more = x_more;
        x_more[(n, 0)] = extra[0];
        x_more[(n, 1)] = extra[1];
        let k = kernel(KernelFamily::ALL[fam], sf, ell);
        let xs = DMatrix::from_row_slice(5, 2, &probe);
        let before = fit(&x, &y, k, noise).unwrap().predict(&xs).unwrap();
        let after = fit(&x_more, &vec![0.0; n + 1], k, noise).unwrap().predict(&xs).unwrap();
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(a.latent_var <= b.latent_var + 1e-9, "{} > {}", a.latent_var, b.latent_var);
        }
    }
}
