use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{FlowDataset, Partition};
use crate::error::{Error, Result};

/// Standard deviations below this are treated as constant features and
/// replaced by 1, so the column is only centered.
pub const CONSTANT_STD: f64 = 1e-12;

/// Per-feature z-score statistics, tagged with the id of the partition they
/// were fit on.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    fit_id: u64,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl NormStats {
    /// Fits population mean and standard deviation on a training partition
    /// (or an unsplit source). Validation rows are refused.
    pub fn fit(ds: &FlowDataset) -> Result<Self> {
        if let Partition::Validation(_) = ds.partition() {
            return Err(Error::Leakage("normalization statistics cannot be fit on validation rows".into()));
        }
        if ds.is_empty() {
            return Err(Error::EmptyInput("cannot fit normalization on zero rows".into()));
        }
        let f = ds.n_features();
        let n = ds.len() as f64;
        let mut mean = vec![0.0; f];
        for r in 0..ds.len() {
            for (m, &v) in mean.iter_mut().zip(ds.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; f];
        for r in 0..ds.len() {
            for ((s, &v), &m) in var.iter_mut().zip(ds.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = libm::sqrt(s / n);
                if sd < CONSTANT_STD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { fit_id: ds.partition().id(), mean, std })
    }

    /// Rebuilds persisted statistics.
    pub fn from_parts(fit_id: u64, mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::LengthMismatch { left: mean.len(), right: std.len() });
        }
        if mean.is_empty() {
            return Err(Error::EmptyInput("normalization statistics have no features".into()));
        }
        if let Some(i) = (0..std.len()).find(|&i| !(std[i] > 0.0 && std[i].is_finite() && mean[i].is_finite())) {
            return Err(Error::InvalidConfig(format!("feature {i}: mean {} std {}", mean[i], std[i])));
        }
        Ok(Self { fit_id, mean, std })
    }

    pub fn fit_id(&self) -> u64 {
        self.fit_id
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Normalizes a dataset. Rows from a split other than the one these
    /// statistics were fit on are refused; unsplit sources (new data to
    /// score) are accepted.
    pub fn apply(&self, mut ds: FlowDataset) -> Result<FlowDataset> {
        match ds.partition() {
            Partition::Train(id) | Partition::Validation(id) if id != self.fit_id => {
                return Err(Error::Leakage(format!(
                    "statistics fit on partition {:#x} applied to split {:#x}",
                    self.fit_id, id
                )));
            }
            _ => {}
        }
        if ds.norm_stats().is_some() {
            return Err(Error::InvalidConfig("dataset is already normalized".into()));
        }
        self.apply_rows(&mut ds.features)?;
        ds.norm = Some(self.clone());
        Ok(ds)
    }

    /// Normalizes a raw row-major matrix in place.
    pub fn apply_rows(&self, features: &mut [f64]) -> Result<()> {
        let f = self.n_features();
        if features.len() % f != 0 {
            return Err(Error::FeatureCountMismatch { expected: f, found: features.len() % f });
        }
        for row in features.chunks_exact_mut(f) {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, SplitSpec};

    fn column(vals: &[f64]) -> FlowDataset {
        FlowDataset::new(vals.to_vec(), 1, vals.iter().enumerate().map(|(i, _)| (i % 2) as u8).collect(), "t")
            .unwrap()
    }

    #[test]
    fn two_four_six() {
        let ds = column(&[2.0, 4.0, 6.0]);
        let stats = NormStats::fit(&ds).unwrap();
        assert_eq!(stats.mean(), &[4.0]);
        assert!((stats.std()[0] - libm::sqrt(8.0 / 3.0)).abs() < 1e-15);
        let out = stats.apply(ds).unwrap();
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in out.features().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_is_centered() {
        let ds = column(&[5.0, 5.0, 5.0]);
        let stats = NormStats::fit(&ds).unwrap();
        assert_eq!(stats.std(), &[1.0]);
        assert_eq!(stats.apply(ds).unwrap().features(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn refit_after_apply_is_standard() {
        let vals: Vec<f64> = (0..40).map(|i| libm::sin(i as f64) * 30.0 + 7.0).collect();
        let ds = FlowDataset::new(vals, 2, (0..20).map(|i| (i % 2) as u8).collect(), "t").unwrap();
        let out = NormStats::fit(&ds).unwrap().apply(ds).unwrap();
        let again = NormStats::fit(&out).unwrap();
        for (&m, &s) in again.mean().iter().zip(again.std()) {
            assert!(m.abs() < 1e-12);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn leakage_is_refused() {
        let ds = FlowDataset::new((0..20).map(f64::from).collect(), 1, (0..20).map(|i| (i % 2) as u8).collect(), "t")
            .unwrap();
        let (train, val) = split(&ds, &SplitSpec { seed: 1, ..SplitSpec::default() }).unwrap();
        assert_eq!(NormStats::fit(&val).unwrap_err().name(), "Leakage");

        let stats = NormStats::fit(&train).unwrap();
        assert!(stats.apply(val.clone()).is_ok());

        // Statistics from a different split of the same source do not apply.
        let (other_train, other_val) = split(&ds, &SplitSpec { seed: 2, ..SplitSpec::default() }).unwrap();
        assert_eq!(stats.apply(other_val).unwrap_err().name(), "Leakage");
        assert_eq!(stats.apply(other_train).unwrap_err().name(), "Leakage");

        // Fresh data from elsewhere is fine.
        assert!(stats.apply(column(&[1.0, 2.0])).is_ok());
    }

    #[test]
    fn double_normalization_is_refused() {
        let ds = column(&[1.0, 2.0, 3.0]);
        let stats = NormStats::fit(&ds).unwrap();
        let once = stats.apply(ds).unwrap();
        assert_eq!(stats.apply(once).unwrap_err().name(), "InvalidConfig");
    }

    #[test]
    fn from_parts_validates() {
        assert!(NormStats::from_parts(0, vec![0.0], vec![0.0]).is_err());
        assert!(NormStats::from_parts(0, vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(NormStats::from_parts(0, vec![0.5], vec![2.0]).is_ok());
    }
}
