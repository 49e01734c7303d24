use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::FlowDataset;
use crate::error::{Error, Result};
use crate::rng;

/// Feature count of generated flows, matching CICIoT2023.
pub const SYNTH_FEATURES: usize = 45;

/// Columns whose class means differ. Spread out so the convolutions see
/// signal at several positions.
pub const INFORMATIVE: [usize; 8] = [2, 7, 13, 18, 24, 29, 35, 40];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difficulty {
    /// Class means 6 standard deviations apart on each informative column.
    Separable,
    /// Class means 1 standard deviation apart.
    Noisy,
}

impl Difficulty {
    fn gap(self) -> f64 {
        match self {
            Difficulty::Separable => 6.0,
            Difficulty::Noisy => 1.0,
        }
    }
}

/// Unit-variance Gaussian clusters, one per class. Row `i` has label `i % 2`,
/// so classes are balanced.
pub fn synth_generate(n: usize, seed: u64, difficulty: Difficulty) -> Result<FlowDataset> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("synthetic dataset needs at least 2 rows, got {n}")));
    }
    let half_gap = difficulty.gap() / 2.0;
    let mut rng = rng::seeded(seed);
    let mut features = Vec::with_capacity(n * SYNTH_FEATURES);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let side = if label == 1 { half_gap } else { -half_gap };
        for j in 0..SYNTH_FEATURES {
            let noise: f64 = rng.sample(StandardNormal);
            let mean = match INFORMATIVE.iter().position(|&k| k == j) {
                // Alternate the direction so no single sign pattern decides.
                Some(p) if p % 2 == 0 => side,
                Some(_) => -side,
                None => 0.0,
            };
            features.push(mean + noise);
        }
        labels.push(label);
    }
    let kind = match difficulty {
        Difficulty::Separable => "separable",
        Difficulty::Noisy => "noisy",
    };
    FlowDataset::new(features, SYNTH_FEATURES, labels, format!("synthetic {kind} n={n} seed={seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Class centroids from `fit`, then nearest-centroid accuracy on `eval`.
    fn nearest_centroid_accuracy(fit: &FlowDataset, eval: &FlowDataset) -> f64 {
        let f = fit.n_features();
        let mut c = [vec![0.0; f], vec![0.0; f]];
        let mut counts = [0.0; 2];
        for r in 0..fit.len() {
            let l = fit.labels()[r] as usize;
            counts[l] += 1.0;
            for (a, &v) in c[l].iter_mut().zip(fit.row(r)) {
                *a += v;
            }
        }
        for l in 0..2 {
            c[l].iter_mut().for_each(|v| *v /= counts[l]);
        }
        let dist = |row: &[f64], k: usize| -> f64 { row.iter().zip(&c[k]).map(|(a, b)| (a - b) * (a - b)).sum() };
        let hits = (0..eval.len())
            .filter(|&r| {
                let guess = (dist(eval.row(r), 1) < dist(eval.row(r), 0)) as u8;
                guess == eval.labels()[r]
            })
            .count();
        hits as f64 / eval.len() as f64
    }

    #[test]
    fn separable_is_separable() {
        let train = synth_generate(256, 1, Difficulty::Separable).unwrap();
        let holdout = synth_generate(256, 2, Difficulty::Separable).unwrap();
        assert_eq!(nearest_centroid_accuracy(&train, &train), 1.0);
        assert_eq!(nearest_centroid_accuracy(&train, &holdout), 1.0);
    }

    #[test]
    fn noisy_is_not() {
        let train = synth_generate(512, 1, Difficulty::Noisy).unwrap();
        let acc = nearest_centroid_accuracy(&train, &train);
        assert!(acc < 0.99 && acc > 0.6, "{acc}");
    }

    #[test]
    fn balanced_and_deterministic() {
        let a = synth_generate(101, 5, Difficulty::Noisy).unwrap();
        assert_eq!(a.class_counts(), (51, 50));
        assert_eq!(a.n_features(), 45);
        assert_eq!(a, synth_generate(101, 5, Difficulty::Noisy).unwrap());
        assert_ne!(a.features(), synth_generate(101, 6, Difficulty::Noisy).unwrap().features());
    }

    #[test]
    fn too_small() {
        assert_eq!(synth_generate(1, 0, Difficulty::Separable).unwrap_err().name(), "InvalidConfig");
    }
}
