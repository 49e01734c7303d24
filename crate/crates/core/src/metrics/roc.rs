use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(fpr, tpr)` points from (0, 0) to (1, 1), non-decreasing in both
/// coordinates, with the trapezoidal area under them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps a threshold down through every distinct score. Scores equal to the
/// threshold count as positive, so a group of tied scores moves the curve
/// diagonally and earns half credit.
pub fn roc_and_auc(labels: &[u8], scores: &[f64]) -> Result<RocCurve> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch { left: labels.len(), right: scores.len() });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("no scores".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidLabel(bad));
    }
    if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::InvalidScore(bad));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (pos_f, neg_f) = (pos as f64, neg as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let p = (fp as f64 / neg_f, tp as f64 / pos_f);
        if points.last() != Some(&p) {
            points.push(p);
        }
    }

    let auc = points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
    Ok(RocCurve { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// P(score of a random positive > a random negative), ties counted 1/2.
    fn pairwise(labels: &[u8], scores: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_and_uninformative() {
        let r = roc_and_auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.points, [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]);

        let r = roc_and_auc(&[0, 1, 0, 1], &[0.3; 4]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points, [(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn errors() {
        assert_eq!(roc_and_auc(&[1, 1], &[0.2, 0.4]).unwrap_err(), Error::SingleClass);
        assert_eq!(roc_and_auc(&[0, 1], &[0.2, 1.5]).unwrap_err(), Error::InvalidScore(1.5));
        assert_eq!(roc_and_auc(&[0, 1], &[0.2, f64::NAN]).unwrap_err().name(), "InvalidScore");
        assert_eq!(roc_and_auc(&[0], &[0.2, 0.1]).unwrap_err().name(), "LengthMismatch");
    }

    proptest! {
        #[test]
        fn auc_is_the_pairwise_statistic(
            pairs in prop::collection::vec((0u8..2, 0u8..6), 2..60)
        ) {
            let (labels, s): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            // Coarse scores so ties are common.
            let scores: Vec<f64> = s.iter().map(|&v| v as f64 / 5.0).collect();
            let r = roc_and_auc(&labels, &scores).unwrap();
            prop_assert!((r.auc - pairwise(&labels, &scores)).abs() < 1e-12);
            prop_assert_eq!(r.points[0], (0.0, 0.0));
            prop_assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));
            for w in r.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
        }
    }
}
