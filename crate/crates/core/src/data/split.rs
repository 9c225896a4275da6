use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CalibrationDataset;
use crate::error::{Error, Result};

/// How to partition a dataset into training and test portions.
#[derive(Clone, Debug, PartialEq)]
pub enum SplitSpec {
    /// Seeded shuffle, then the first `round(f·n)` records train.
    RandomFraction { train_fraction: f64, seed: u64 },
    /// Seeded shuffle into `k` near-equal folds.
    KFold { k: usize, seed: u64 },
    /// Records of the listed runs are held out for testing.
    ByRun { held_out: Vec<String> },
}

/// One train/test pair.
#[derive(Clone, Debug)]
pub struct Split {
    pub train: CalibrationDataset,
    pub test: CalibrationDataset,
}

impl SplitSpec {
    pub fn validate(&self, data: &CalibrationDataset) -> Result<()> {
        match self {
            SplitSpec::RandomFraction { train_fraction, .. } => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return Err(Error::Config(format!(
                        "train fraction must lie in (0, 1), got {train_fraction}"
                    )));
                }
                if data.len() < 2 {
                    return Err(Error::input("random split needs at least two records"));
                }
            }
            SplitSpec::KFold { k, .. } => {
                if *k < 2 {
                    return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
                }
                if data.len() < *k {
                    return Err(Error::input(format!(
                        "{} records cannot fill {k} folds",
                        data.len()
                    )));
                }
            }
            SplitSpec::ByRun { held_out } => {
                if held_out.is_empty() {
                    return Err(Error::Config(
                        "by-run split needs at least one run id".into(),
                    ));
                }
                let runs = data.run_ids();
                for id in held_out {
                    if !runs.contains(id) {
                        return Err(Error::input(format!("run '{id}' is not in the dataset")));
                    }
                }
                if runs.iter().all(|r| held_out.contains(r)) {
                    return Err(Error::input("by-run split would leave no training runs"));
                }
            }
        }
        Ok(())
    }
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx
}

/// Splits `data` per `spec`. Random and by-run specs yield one pair;
/// k-fold yields `k` pairs of (out-of-fold, in-fold).
pub fn split(data: &CalibrationDataset, spec: &SplitSpec) -> Result<Vec<Split>> {
    spec.validate(data)?;
    let n = data.len();
    let out = match spec {
        SplitSpec::RandomFraction {
            train_fraction,
            seed,
        } => {
            let idx = shuffled(n, *seed);
            let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
            vec![Split {
                train: data.subset(
                    &idx[..n_train],
                    format!("{} [train {train_fraction}]", data.provenance),
                ),
                test: data.subset(
                    &idx[n_train..],
                    format!("{} [test {train_fraction}]", data.provenance),
                ),
            }]
        }
        SplitSpec::KFold { k, seed } => {
            let idx = shuffled(n, *seed);
            let (base, extra) = (n / k, n % k);
            let mut folds = Vec::with_capacity(*k);
            let mut start = 0;
            for f in 0..*k {
                let len = base + usize::from(f < extra);
                let mut test_idx = idx[start..start + len].to_vec();
                let mut train_idx: Vec<usize> = idx[..start]
                    .iter()
                    .chain(&idx[start + len..])
                    .copied()
                    .collect();
                test_idx.sort_unstable();
                train_idx.sort_unstable();
                folds.push(Split {
                    train: data.subset(&train_idx, format!("{} [fold {f} train]", data.provenance)),
                    test: data.subset(&test_idx, format!("{} [fold {f} test]", data.provenance)),
                });
                start += len;
            }
            folds
        }
        SplitSpec::ByRun { held_out } => {
            let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| held_out.contains(&data.records[i].run_id));
            let tag = held_out.join(",");
            vec![Split {
                train: data.subset(&train_idx, format!("{} [without {tag}]", data.provenance)),
                test: data.subset(&test_idx, format!("{} [only {tag}]", data.provenance)),
            }]
        }
    };
    Ok(out)
}

/// Convenience for single-pair specs.
pub fn split_pair(data: &CalibrationDataset, spec: &SplitSpec) -> Result<Split> {
    if matches!(spec, SplitSpec::KFold { .. }) {
        return Err(Error::Config(
            "k-fold produces several pairs; use split()".into(),
        ));
    }
    Ok(split(data, spec)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{toy_dataset, CalibrationRecord};

    fn numbered(n: usize) -> CalibrationDataset {
        CalibrationDataset::new(
            (0..n)
                .map(|i| CalibrationRecord {
                    voltage: i as f64,
                    air_temp: 20.0 + (i % 7) as f64,
                    wind_speed: 0.0,
                    run_id: format!("R{}", i % 7),
                })
                .collect(),
            "numbered",
        )
    }

    fn keys(d: &CalibrationDataset) -> Vec<usize> {
        d.records.iter().map(|r| r.voltage as usize).collect()
    }

    #[test]
    fn seventy_percent_of_4112() {
        let d = numbered(4112);
        let s = split_pair(
            &d,
            &SplitSpec::RandomFraction {
                train_fraction: 0.7,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(s.train.len(), 2878);
        assert_eq!(s.test.len(), 1234);
        let mut all: Vec<usize> = keys(&s.train).into_iter().chain(keys(&s.test)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..4112).collect::<Vec<_>>());
    }

    #[test]
    fn random_split_is_seeded() {
        let d = numbered(50);
        let spec = SplitSpec::RandomFraction {
            train_fraction: 0.5,
            seed: 9,
        };
        let a = split_pair(&d, &spec).unwrap();
        let b = split_pair(&d, &spec).unwrap();
        assert_eq!(keys(&a.train), keys(&b.train));
        let c = split_pair(
            &d,
            &SplitSpec::RandomFraction {
                train_fraction: 0.5,
                seed: 10,
            },
        )
        .unwrap();
        assert_ne!(keys(&a.train), keys(&c.train));
    }

    #[test]
    fn kfold_partitions_every_record_once() {
        let d = numbered(4112);
        let folds = split(&d, &SplitSpec::KFold { k: 6, seed: 3 }).unwrap();
        assert_eq!(folds.len(), 6);
        let mut seen = vec![0usize; 4112];
        for f in &folds {
            assert_eq!(f.train.len() + f.test.len(), 4112);
            assert!(f.test.len() == 685 || f.test.len() == 686);
            for k in keys(&f.test) {
                seen[k] += 1;
            }
            let tr = keys(&f.train);
            assert!(keys(&f.test).iter().all(|k| !tr.contains(k)));
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn by_run_partition() {
        let d = toy_dataset();
        let s = split_pair(
            &d,
            &SplitSpec::ByRun {
                held_out: vec!["B".into()],
            },
        )
        .unwrap();
        assert_eq!(s.test.len(), 4);
        assert_eq!(s.train.len(), 8);
        assert!(s.test.records.iter().all(|r| r.run_id == "B"));
        assert!(s.train.records.iter().all(|r| r.run_id != "B"));
        // order preserved
        assert_eq!(s.train.records[0], d.records[0]);
        assert_eq!(s.train.records[4], d.records[8]);
    }

    #[test]
    fn invalid_specs_rejected() {
        let d = toy_dataset();
        assert!(split(
            &d,
            &SplitSpec::ByRun {
                held_out: vec!["nope".into()]
            }
        )
        .is_err());
        assert!(split(
            &d,
            &SplitSpec::ByRun {
                held_out: vec!["A".into(), "B".into(), "C".into()]
            }
        )
        .is_err());
        assert!(split(&d, &SplitSpec::KFold { k: 1, seed: 0 }).is_err());
        assert!(split(
            &d,
            &SplitSpec::RandomFraction {
                train_fraction: 1.0,
                seed: 0
            }
        )
        .is_err());
        assert!(split(
            &d,
            &SplitSpec::RandomFraction {
                train_fraction: 0.0,
                seed: 0
            }
        )
        .is_err());
    }
}
