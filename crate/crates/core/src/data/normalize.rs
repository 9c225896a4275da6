use nalgebra::DMatrix;

use super::{CalibrationDataset, INPUT_DIM};
use crate::error::{Error, Result};

/// Per-input affine map onto [0, 1], fitted on training data only.
///
/// Inputs outside the training range map outside [0, 1]; nothing is
/// clipped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationTransform {
    pub min: [f64; INPUT_DIM],
    pub max: [f64; INPUT_DIM],
}

impl NormalizationTransform {
    pub fn new(min: [f64; INPUT_DIM], max: [f64; INPUT_DIM]) -> Result<Self> {
        for d in 0..INPUT_DIM {
            if !(min[d].is_finite() && max[d].is_finite() && max[d] > min[d]) {
                return Err(Error::input(format!(
                    "degenerate normalization for input {d}: min {} max {}",
                    min[d], max[d]
                )));
            }
        }
        Ok(NormalizationTransform { min, max })
    }

    /// Fits the transform to the training records.
    pub fn fit(train: &CalibrationDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::input("cannot fit normalization on an empty dataset"));
        }
        let mut min = [f64::INFINITY; INPUT_DIM];
        let mut max = [f64::NEG_INFINITY; INPUT_DIM];
        for r in &train.records {
            for (d, v) in r.inputs().into_iter().enumerate() {
                min[d] = min[d].min(v);
                max[d] = max[d].max(v);
            }
        }
        Self::new(min, max)
    }

    pub fn apply(&self, x: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        let mut out = [0.0; INPUT_DIM];
        for d in 0..INPUT_DIM {
            out[d] = (x[d] - self.min[d]) / (self.max[d] - self.min[d]);
        }
        out
    }

    pub fn invert(&self, z: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        let mut out = [0.0; INPUT_DIM];
        for d in 0..INPUT_DIM {
            out[d] = self.min[d] + z[d] * (self.max[d] - self.min[d]);
        }
        out
    }

    /// Normalized n×2 input matrix and the untouched wind-speed targets.
    pub fn normalize(&self, data: &CalibrationDataset) -> (DMatrix<f64>, Vec<f64>) {
        let x = self.normalize_inputs(&data.raw_inputs());
        (x, data.wind_speeds())
    }

    /// Applies the transform row-wise to a raw n×2 matrix.
    pub fn normalize_inputs(&self, raw: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(raw.nrows(), raw.ncols(), |i, j| {
            (raw[(i, j)] - self.min[j]) / (self.max[j] - self.min[j])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{toy_dataset, CalibrationRecord};
    use proptest::prelude::*;

    #[test]
    fn training_extremes_map_to_unit_interval() {
        let d = toy_dataset();
        let t = NormalizationTransform::fit(&d).unwrap();
        let (x, y) = t.normalize(&d);
        for j in 0..2 {
            let col = x.column(j);
            assert_eq!(col.min(), 0.0);
            assert_eq!(col.max(), 1.0);
        }
        assert_eq!(y, d.wind_speeds());
    }

    #[test]
    fn extrapolated_inputs_are_not_clipped() {
        let t = NormalizationTransform::new([10.0, 20.0], [20.0, 30.0]).unwrap();
        let z = t.apply(&[25.0, 15.0]);
        assert!(z[0] > 1.0);
        assert!(z[1] < 0.0);
    }

    #[test]
    fn degenerate_transform_rejected() {
        assert!(NormalizationTransform::new([1.0, 0.0], [1.0, 1.0]).is_err());
        let mut d = toy_dataset();
        for r in &mut d.records {
            r.air_temp = 21.0;
        }
        assert!(NormalizationTransform::fit(&d).is_err());
    }

    #[test]
    fn test_records_never_influence_transform() {
        let train = toy_dataset();
        let t1 = NormalizationTransform::fit(&train).unwrap();
        let mut test = train.clone();
        test.records.push(CalibrationRecord {
            voltage: 99.0,
            air_temp: -40.0,
            wind_speed: 1.0,
            run_id: "X".into(),
        });
        // The transform only ever sees the training set.
        let t2 = NormalizationTransform::fit(&train).unwrap();
        assert_eq!(t1, t2);
        let (x, _) = t1.normalize(&test);
        assert!(x[(12, 0)] > 1.0);
    }

    proptest! {
        #[test]
        fn invert_round_trips(v in -50.0f64..50.0, t in -50.0f64..50.0) {
            let tr = NormalizationTransform::new([12.0, 18.5], [29.0, 31.0]).unwrap();
            let back = tr.invert(&tr.apply(&[v, t]));
            prop_assert!((back[0] - v).abs() <= 1e-12 * v.abs().max(1.0));
            prop_assert!((back[1] - t).abs() <= 1e-12 * t.abs().max(1.0));
        }
    }
}
