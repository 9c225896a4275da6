use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::CalibrationDataset;
use crate::error::{Error, Result};

/// Shape of the random air-temperature error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ErrorDistribution {
    /// Uniform on [−a, +a]: `a` is an accuracy bound.
    #[default]
    Uniform,
    /// Zero-mean Gaussian with standard deviation `a`.
    Gaussian,
}

/// Perturbs every air temperature by an independent uniform draw in
/// [−amplitude, +amplitude].
pub fn inject_random_error(
    data: &CalibrationDataset,
    amplitude: f64,
    seed: u64,
) -> Result<CalibrationDataset> {
    inject_random_error_with(data, amplitude, seed, ErrorDistribution::Uniform)
}

pub fn inject_random_error_with(
    data: &CalibrationDataset,
    amplitude: f64,
    seed: u64,
    dist: ErrorDistribution,
) -> Result<CalibrationDataset> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::input(format!(
            "error amplitude must be >= 0, got {amplitude}"
        )));
    }
    if amplitude == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prov = format!(
        "{} [random temp error {amplitude} {dist:?}]",
        data.provenance
    );
    Ok(match dist {
        ErrorDistribution::Uniform => {
            data.map_air_temp(|_, t| t + rng.random_range(-amplitude..=amplitude), prov)
        }
        ErrorDistribution::Gaussian => {
            let normal = Normal::new(0.0, amplitude).expect("amplitude checked");
            data.map_air_temp(|_, t| t + normal.sample(&mut rng), prov)
        }
    })
}

/// Adds a constant offset to every air temperature.
pub fn inject_systematic_error(data: &CalibrationDataset, offset: f64) -> CalibrationDataset {
    if offset == 0.0 {
        return data.clone();
    }
    data.map_air_temp(
        |_, t| t + offset,
        format!("{} [systematic temp error {offset:+}]", data.provenance),
    )
}
