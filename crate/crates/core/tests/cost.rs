mod common;

use std::time::{Duration, Instant};

use common::{rng, unit_square};
use gpcal_core::{fit, KernelSpec};

/// Best of `reps` wall-clock fits at size `n`.
fn fit_time(n: usize, reps: usize) -> Duration {
    let mut r = rng(n as u64);
    let x = unit_square(n, &mut r);
    let y: Vec<f64> = (0..n)
        .map(|i| (4.0 * x[(i, 0)]).sin() + x[(i, 1)])
        .collect();
    let k = KernelSpec::matern52(1.0, 0.2).unwrap();
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            let m = fit(&x, &y, k, 0.05).unwrap();
            let d = t.elapsed();
            assert_eq!(m.n_train(), n);
            d
        })
        .min()
        .unwrap()
}

#[test]
fn fit_scales_within_contract() {
    let t2000 = fit_time(2000, 1);
    assert!(t2000 < Duration::from_secs(60), "n=2000 fit took {t2000:?}");
    let t500 = fit_time(500, 5);
    let t1000 = fit_time(1000, 3);
    let ratio = t1000.as_secs_f64() / t500.as_secs_f64();
    println!("n=500 {t500:?}, n=1000 {t1000:?} (ratio {ratio:.2}), n=2000 {t2000:?}");
    assert!(ratio <= 12.0, "1000/500 fit-time ratio {ratio:.2}");
}
