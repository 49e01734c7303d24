use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FlowDataset, Fnv, Partition};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 0, stratified: true }
    }
}

/// Train and validation row indices, each ascending. Both sides are
/// non-empty.
pub fn split_indices(labels: &[u8], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidConfig("train_fraction must lie strictly between 0 and 1".into()));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::EmptyInput("splitting needs at least 2 rows".into()));
    }
    let mut rng = rng::seeded(spec.seed);

    // Each group is shuffled and its first `take` rows go to train.
    let mut groups: Vec<Vec<usize>> = if spec.stratified {
        let mut g = [Vec::new(), Vec::new()];
        for (i, &l) in labels.iter().enumerate() {
            g[(l != 0) as usize].push(i);
        }
        g.into_iter().filter(|v| !v.is_empty()).collect()
    } else {
        alloc::vec![(0..n).collect()]
    };
    let mut takes: Vec<usize> = Vec::with_capacity(groups.len());
    for g in &mut groups {
        g.shuffle(&mut rng);
        takes.push(libm::round(g.len() as f64 * f) as usize);
    }
    // Keep both sides non-empty, touching the largest group.
    let largest = (0..groups.len()).max_by_key(|&i| (groups[i].len(), usize::MAX - i)).expect("n >= 2");
    let total: usize = takes.iter().sum();
    if total == 0 {
        takes[largest] += 1;
    } else if total == n {
        takes[largest] -= 1;
    }

    let mut train = Vec::new();
    let mut val = Vec::new();
    for (g, &take) in groups.iter().zip(&takes) {
        train.extend_from_slice(&g[..take]);
        val.extend_from_slice(&g[take..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Splits an unnormalized dataset into (train, validation).
pub fn split(ds: &FlowDataset, spec: &SplitSpec) -> Result<(FlowDataset, FlowDataset)> {
    if ds.norm_stats().is_some() {
        return Err(Error::Leakage("split before normalizing; this dataset is already normalized".into()));
    }
    let (train, val) = split_indices(ds.labels(), spec)?;
    let mut h = Fnv::new();
    h.write(&ds.partition().id().to_le_bytes());
    h.write(&spec.seed.to_le_bytes());
    h.write(&spec.train_fraction.to_bits().to_le_bytes());
    h.write(&[spec.stratified as u8]);
    let id = h.finish();
    Ok((ds.subset(&train, Partition::Train(id)), ds.subset(&val, Partition::Validation(id))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn ten_rows_eighty_percent() {
        let labels = vec![0u8; 10];
        let (t, v) = split_indices(&labels, &SplitSpec::default()).unwrap();
        assert_eq!((t.len(), v.len()), (8, 2));
        let unstrat = SplitSpec { stratified: false, ..SplitSpec::default() };
        let (t, v) = split_indices(&labels, &unstrat).unwrap();
        assert_eq!((t.len(), v.len()), (8, 2));
    }

    #[test]
    fn stratified_ninety_ten() {
        let labels: Vec<u8> = (0..100).map(|i| (i >= 90) as u8).collect();
        let (t, _) = split_indices(&labels, &SplitSpec { seed: 3, ..SplitSpec::default() }).unwrap();
        let minority = t.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!(t.len() - minority, 72);
        assert_eq!(minority, 8);
    }

    #[test]
    fn deterministic_in_seed() {
        let labels: Vec<u8> = (0..50).map(|i| (i % 3 == 0) as u8).collect();
        let spec = SplitSpec { seed: 9, ..SplitSpec::default() };
        assert_eq!(split_indices(&labels, &spec).unwrap(), split_indices(&labels, &spec).unwrap());
        let other = SplitSpec { seed: 10, ..spec };
        assert_ne!(split_indices(&labels, &spec).unwrap(), split_indices(&labels, &other).unwrap());
    }

    #[test]
    fn rejects_degenerate() {
        assert_eq!(split_indices(&[0], &SplitSpec::default()).unwrap_err().name(), "EmptyInput");
        let bad = SplitSpec { train_fraction: 1.0, ..SplitSpec::default() };
        assert_eq!(split_indices(&[0, 1], &bad).unwrap_err().name(), "InvalidConfig");
    }

    #[test]
    fn two_rows_one_each_side() {
        for stratified in [true, false] {
            for f in [0.01, 0.5, 0.99] {
                let spec = SplitSpec { train_fraction: f, seed: 0, stratified };
                let (t, v) = split_indices(&[0, 1], &spec).unwrap();
                assert_eq!((t.len(), v.len()), (1, 1));
            }
        }
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_and_complete(
            labels in prop::collection::vec(0u8..2, 2..300),
            f in 0.05f64..0.95,
            seed in any::<u64>(),
            stratified in any::<bool>(),
        ) {
            let n = labels.len();
            let spec = SplitSpec { train_fraction: f, seed, stratified };
            let (t, v) = split_indices(&labels, &spec).unwrap();
            prop_assert!(!t.is_empty() && !v.is_empty());
            let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let target = n as f64 * f;
            prop_assert!((t.len() as f64 - target).abs() <= 1.0 + 1e-9, "{} vs {}", t.len(), target);
            if stratified {
                for class in 0..2u8 {
                    let total = labels.iter().filter(|&&l| l == class).count();
                    let got = t.iter().filter(|&&i| labels[i] == class).count();
                    prop_assert!((got as f64 - total as f64 * f).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }
}
