//! Synthetic hot-wire calibration campaigns.
//!
//! The wire response follows King's law with an overheat factor:
//!
//! ```text
//! V² = (A + B·U^n) · (Tw − Ta)
//! ```
//!
//! so the voltage depends jointly on the wind speed `U` and the air
//! temperature `Ta`. Each run holds the air near one nominal temperature
//! and steps the speed through a ramp, taking several samples per step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CalibrationDataset, CalibrationRecord};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Nominal air temperature of each run (°C).
    pub run_temps: Vec<f64>,
    /// Lowest speed of the ramp (m/s).
    pub speed_min: f64,
    /// Highest speed of the ramp (m/s).
    pub speed_max: f64,
    /// Number of evenly spaced speed steps per run.
    pub speed_steps: usize,
    /// Samples logged at each speed step.
    pub samples_per_step: usize,
    /// Wire temperature Tw (°C).
    pub wire_temp: f64,
    pub king_a: f64,
    pub king_b: f64,
    pub king_exponent: f64,
    /// Gaussian noise on the hot-wire voltage (V).
    pub voltage_noise_std: f64,
    /// Gaussian noise of the reference anemometer (m/s).
    pub speed_noise_std: f64,
    /// Within-run drift of the actual air temperature around the nominal (°C).
    pub air_temp_jitter_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            run_temps: vec![19.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0],
            speed_min: 0.0,
            speed_max: 21.0,
            speed_steps: 30,
            samples_per_step: 8,
            wire_temp: 220.0,
            king_a: 1.0,
            king_b: 0.8,
            king_exponent: 0.45,
            voltage_noise_std: 0.005,
            speed_noise_std: 0.05,
            air_temp_jitter_std: 0.1,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.run_temps.is_empty() {
            return bad("at least one run temperature is required".into());
        }
        if self.run_temps.iter().any(|t| !t.is_finite()) {
            return bad("run temperatures must be finite".into());
        }
        let t_max = self
            .run_temps
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(self.wire_temp > t_max) {
            return bad(format!(
                "wire temperature {} must exceed the hottest run ({t_max})",
                self.wire_temp
            ));
        }
        if !(self.speed_min >= 0.0 && self.speed_max > self.speed_min && self.speed_max.is_finite())
        {
            return bad(format!(
                "speed ramp must satisfy 0 <= min < max, got [{}, {}]",
                self.speed_min, self.speed_max
            ));
        }
        if self.speed_steps < 2 || self.samples_per_step < 1 {
            return bad("need >= 2 speed steps and >= 1 sample per step".into());
        }
        if !(self.king_a > 0.0 && self.king_b > 0.0 && self.king_exponent > 0.0) {
            return bad("King's-law coefficients must be positive".into());
        }
        for (name, v) in [
            ("voltage_noise_std", self.voltage_noise_std),
            ("speed_noise_std", self.speed_noise_std),
            ("air_temp_jitter_std", self.air_temp_jitter_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Noise-free wire voltage for speed `u` at air temperature `ta`.
    pub fn clean_voltage(&self, u: f64, ta: f64) -> f64 {
        ((self.king_a + self.king_b * u.powf(self.king_exponent)) * (self.wire_temp - ta)).sqrt()
    }

    pub fn speed_ramp(&self) -> Vec<f64> {
        let span = self.speed_max - self.speed_min;
        let last = (self.speed_steps - 1) as f64;
        (0..self.speed_steps)
            .map(|i| self.speed_min + span * i as f64 / last)
            .collect()
    }

    pub fn run_id(temp: f64) -> String {
        format!("T{temp}")
    }

    pub fn describe(&self) -> String {
        format!(
            "synthetic King's-law campaign: runs {:?} degC, {} steps {}..{} m/s x {} samples, \
             Tw={} A={} B={} n={} sv={} su={} st={} seed={}",
            self.run_temps,
            self.speed_steps,
            self.speed_min,
            self.speed_max,
            self.samples_per_step,
            self.wire_temp,
            self.king_a,
            self.king_b,
            self.king_exponent,
            self.voltage_noise_std,
            self.speed_noise_std,
            self.air_temp_jitter_std,
            self.seed
        )
    }
}

fn normal(std: f64) -> Option<Normal<f64>> {
    (std > 0.0).then(|| Normal::new(0.0, std).expect("std validated"))
}

/// Generates a calibration dataset; deterministic for a fixed config.
pub fn synthesize(cfg: &SynthConfig) -> Result<CalibrationDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let v_noise = normal(cfg.voltage_noise_std);
    let u_noise = normal(cfg.speed_noise_std);
    let t_noise = normal(cfg.air_temp_jitter_std);
    let ramp = cfg.speed_ramp();

    let mut records =
        Vec::with_capacity(cfg.run_temps.len() * cfg.speed_steps * cfg.samples_per_step);
    for &nominal in &cfg.run_temps {
        let run_id = SynthConfig::run_id(nominal);
        for &u in &ramp {
            for _ in 0..cfg.samples_per_step {
                let ta = nominal + t_noise.map_or(0.0, |d| d.sample(&mut rng));
                if ta >= cfg.wire_temp {
                    return Err(Error::Config(format!(
                        "air temperature {ta} reached the wire temperature"
                    )));
                }
                let voltage =
                    cfg.clean_voltage(u, ta) + v_noise.map_or(0.0, |d| d.sample(&mut rng));
                let measured = u + u_noise.map_or(0.0, |d| d.sample(&mut rng));
                records.push(CalibrationRecord {
                    voltage,
                    air_temp: ta,
                    wind_speed: measured.max(0.0),
                    run_id: run_id.clone(),
                });
            }
        }
    }
    Ok(CalibrationDataset::new(records, cfg.describe()))
}
