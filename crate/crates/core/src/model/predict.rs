use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::CLASSES;
use super::graph::ModelGraph;
use crate::error::Result;
use crate::nn::Mode;
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

impl Label {
    pub fn from_index(i: u8) -> Self {
        if i == 0 {
            Label::Benign
        } else {
            Label::Malicious
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Label::Benign => 0,
            Label::Malicious => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malicious => "malicious",
        }
    }

    /// Argmax over `(p_benign, p_malicious)`; an exact tie goes to malicious.
    pub fn from_probabilities(p_benign: f64, p_malicious: f64) -> Self {
        if p_malicious >= p_benign {
            Label::Malicious
        } else {
            Label::Benign
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// `(p_benign, p_malicious)` from the final softmax.
    pub probabilities: (f64, f64),
    pub label: Label,
    pub head_a: (f64, f64),
    pub head_b: (f64, f64),
}

impl<T: Real> ModelGraph<T> {
    /// Infer-mode predictions for already normalized `[batch, features]` rows.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Vec<Prediction>> {
        let out = self.forward(x, Mode::Infer)?;
        let pairs = |t: &Tensor<T>| -> Vec<(f64, f64)> {
            t.data().chunks_exact(CLASSES).map(|r| (r[0].to_f64(), r[1].to_f64())).collect()
        };
        let probs = pairs(&out.probabilities);
        let a = pairs(&out.head_a);
        let b = pairs(&out.head_b);
        Ok(probs
            .into_iter()
            .zip(a)
            .zip(b)
            .map(|((p, head_a), head_b)| Prediction {
                probabilities: p,
                label: Label::from_probabilities(p.0, p.1),
                head_a,
                head_b,
            })
            .collect())
    }
}

/// Mean categorical cross-entropy of probability rows against one-hot rows.
/// Zero-label terms contribute nothing, so an exact one-hot prediction costs 0.
pub fn cross_entropy<T: Real>(probs: &Tensor<T>, labels: &Tensor<T>) -> Result<T> {
    labels.expect_shape(probs.shape())?;
    let rows = probs.len() / probs.shape().last().copied().unwrap_or(1);
    let tiny = T::from_f64(1e-300_f64.max(f32::MIN_POSITIVE as f64));
    let total = probs.data().iter().zip(labels.data()).fold(T::ZERO, |acc, (&p, &y)| {
        if y == T::ZERO {
            acc
        } else {
            acc - y * p.max(tiny).ln()
        }
    });
    Ok(total / T::from_f64(rows as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn argmax_and_tie_break() {
        assert_eq!(Label::from_probabilities(0.1, 0.9), Label::Malicious);
        assert_eq!(Label::from_probabilities(0.5, 0.5), Label::Malicious);
        assert_eq!(Label::from_probabilities(0.7, 0.3), Label::Benign);
    }

    #[test]
    fn perfect_prediction_costs_nothing() {
        let y = Tensor::<f64>::new(&[2, 2], alloc::vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(cross_entropy(&y, &y).unwrap(), 0.0);
        let u = Tensor::<f64>::full(&[2, 2], 0.5);
        assert!((cross_entropy(&u, &y).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn predict_is_pure() {
        let m = ModelGraph::<f32>::build(&ModelConfig::default(), 1).unwrap();
        let x = Tensor::from_fn(&[3, 45], |i| libm::cosf(i as f32));
        let a = m.predict(&x).unwrap();
        let b = m.predict(&x).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert!((p.probabilities.0 + p.probabilities.1 - 1.0).abs() < 1e-6);
            assert_eq!(p.label, Label::from_probabilities(p.probabilities.0, p.probabilities.1));
        }
    }

    #[test]
    fn shifting_both_logits_changes_nothing() {
        let m = ModelGraph::<f64>::build(&ModelConfig::default(), 4).unwrap();
        let x = Tensor::from_fn(&[5, 45], |i| libm::sin(i as f64 * 0.37));
        let base = m.predict(&x).unwrap();
        for c in [-7.5, 0.25, 40.0] {
            let mut shifted = m.clone();
            for b in shifted.output.bias.data_mut() {
                *b += c;
            }
            for (p, q) in base.iter().zip(shifted.predict(&x).unwrap()) {
                assert!((p.probabilities.0 - q.probabilities.0).abs() < 1e-6);
                assert!((p.probabilities.1 - q.probabilities.1).abs() < 1e-6);
                assert_eq!(p.label, q.label);
            }
        }
    }
}
