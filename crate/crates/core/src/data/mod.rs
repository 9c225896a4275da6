//! Calibration datasets: records, CSV I/O, normalization, splitting,
//! temperature-error injection and a synthetic hot-wire generator.

mod csv_io;
mod inject;
mod normalize;
mod split;
mod synth;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

pub use csv_io::{load_csv, parse_csv, save_csv, write_csv};
pub use inject::{
    inject_random_error, inject_random_error_with, inject_systematic_error, ErrorDistribution,
};
pub use normalize::NormalizationTransform;
pub use split::{split, split_pair, Split, SplitSpec};
pub use synth::{synthesize, SynthConfig};

/// Number of model inputs: hot-wire voltage and air temperature.
pub const INPUT_DIM: usize = 2;

/// One synchronized sample of the hot-wire sensor and the references.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationRecord {
    /// Raw hot-wire output (V).
    pub voltage: f64,
    /// Reference air temperature (°C).
    pub air_temp: f64,
    /// Reference wind speed (m/s).
    pub wind_speed: f64,
    /// Measurement campaign at one nominal temperature.
    pub run_id: String,
}

impl CalibrationRecord {
    pub fn inputs(&self) -> [f64; INPUT_DIM] {
        [self.voltage, self.air_temp]
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CalibrationDataset {
    pub records: Vec<CalibrationRecord>,
    pub provenance: String,
}

impl CalibrationDataset {
    pub fn new(records: Vec<CalibrationRecord>, provenance: impl Into<String>) -> Self {
        CalibrationDataset {
            records,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Raw (unnormalized) n×2 input matrix.
    pub fn raw_inputs(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), INPUT_DIM, |i, j| self.records[i].inputs()[j])
    }

    pub fn wind_speeds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.wind_speed).collect()
    }

    /// Distinct run ids in order of first appearance.
    pub fn run_ids(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for r in &self.records {
            if !seen.iter().any(|s: &String| s == &r.run_id) {
                seen.push(r.run_id.clone());
            }
        }
        seen
    }

    /// Mean air temperature of each run, keyed by run id.
    pub fn run_temperatures(&self) -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for r in &self.records {
            let e = acc.entry(r.run_id.clone()).or_insert((0.0, 0));
            e.0 += r.air_temp;
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(k, (s, c))| (k, s / c as f64))
            .collect()
    }

    /// New dataset holding the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize], provenance: impl Into<String>) -> Self {
        CalibrationDataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            provenance: provenance.into(),
        }
    }

    pub fn map_air_temp(&self, mut f: impl FnMut(usize, f64) -> f64, provenance: String) -> Self {
        CalibrationDataset {
            records: self
                .records
                .iter()
                .enumerate()
                .map(|(i, r)| CalibrationRecord {
                    air_temp: f(i, r.air_temp),
                    ..r.clone()
                })
                .collect(),
            provenance,
        }
    }
}

#[cfg(test)]
pub(crate) fn toy_dataset() -> CalibrationDataset {
    let mut records = Vec::new();
    for (run, t) in [("A", 20.0), ("B", 25.0), ("C", 30.0)] {
        for k in 0..4 {
            records.push(CalibrationRecord {
                voltage: 14.0 + k as f64 + t / 100.0,
                air_temp: t + 0.01 * k as f64,
                wind_speed: 2.0 * k as f64,
                run_id: run.to_string(),
            });
        }
    }
    CalibrationDataset::new(records, "toy")
}
