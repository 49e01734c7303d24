//! Central finite-difference checks of the analytic gradients, in `f64`.
//!
//! Layers are checked against the scalar probe `sum(output * R)` for a fixed
//! random `R`, so the upstream gradient is `R` itself. The full model is
//! checked against its cross-entropy loss. Each entry's error is
//!
//! ```text
//! |analytic - numeric| / max(|analytic|, |numeric|, DENOM_FLOOR)
//! ```
//!
//! and a tensor reports the worst entry it contains. In the whole-model check
//! an entry whose `+h` and `-h` evaluations put some ReLU input on different
//! sides of zero is not differentiable over the probe interval; it is skipped
//! and counted in [`TensorCheck::kinks_skipped`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::model::{ConvBlock, ModelConfig, ModelGraph, RESHAPE_STEPS};
use crate::nn::{
    Activation, AvgPool1d, BatchNorm1d, Conv1d, Dense, Layer, Lstm, LstmOutput, Mode, Padding,
};
use crate::rng;
use crate::tensor::Tensor;

pub const STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-5;
/// Below this magnitude errors are measured in absolute terms; central
/// differences at `STEP` carry roughly `1e-11` of rounding noise.
pub const DENOM_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    /// e.g. `"conv1d/kernel"` or `"model/lstm0.recurrent_kernel"`.
    pub name: String,
    pub worst_error: f64,
    pub entries_checked: usize,
    pub kinks_skipped: usize,
}

impl TensorCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.worst_error < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(DENOM_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Up to `limit` distinct entry indices of a tensor with `len` entries, in
/// ascending order; all of them when `limit` is `None` or large enough.
fn pick_entries<R: Rng + ?Sized>(len: usize, limit: Option<usize>, rng: &mut R) -> Vec<usize> {
    match limit {
        Some(k) if k < len => {
            let mut idx = rand::seq::index::sample(rng, len, k).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..len).collect(),
    }
}

fn probe<L: Layer<f64>>(layer: &L, x: &Tensor<f64>, mode: Mode, weights: &Tensor<f64>) -> Result<f64> {
    let (y, _) = layer.forward(x, mode)?;
    Ok(y.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum())
}

/// Checks every parameter of `layer` and its input gradient at `x`.
pub fn check_layer<L: Layer<f64>, R: Rng + ?Sized>(
    label: &str,
    layer: &mut L,
    x: &Tensor<f64>,
    mode: Mode,
    limit: Option<usize>,
    rng: &mut R,
) -> Result<Vec<TensorCheck>> {
    let (y, cache) = layer.forward(x, mode)?;
    let weights = Tensor::from_fn(y.shape(), |_| rng.random_range(-1.0..1.0));
    let grads = layer.backward(&cache, &weights)?;

    let mut out = Vec::new();
    let names = layer.param_names();
    for (p, analytic) in grads.params.iter().enumerate() {
        let entries = pick_entries(analytic.len(), limit, rng);
        let mut worst: f64 = 0.0;
        for &e in &entries {
            let orig = layer.params_mut()[p].data()[e];
            layer.params_mut()[p].data_mut()[e] = orig + STEP;
            let plus = probe(layer, x, mode, &weights)?;
            layer.params_mut()[p].data_mut()[e] = orig - STEP;
            let minus = probe(layer, x, mode, &weights)?;
            layer.params_mut()[p].data_mut()[e] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic.data()[e], numeric));
        }
        out.push(TensorCheck { name: format!("{label}/{}", names[p]), worst_error: worst, entries_checked: entries.len(), kinks_skipped: 0 });
    }

    let entries = pick_entries(x.len(), limit, rng);
    let mut xp = x.clone();
    let mut worst: f64 = 0.0;
    for &e in &entries {
        let orig = xp.data()[e];
        xp.data_mut()[e] = orig + STEP;
        let plus = probe(layer, &xp, mode, &weights)?;
        xp.data_mut()[e] = orig - STEP;
        let minus = probe(layer, &xp, mode, &weights)?;
        xp.data_mut()[e] = orig;
        let numeric = (plus - minus) / (2.0 * STEP);
        worst = worst.max(relative_error(grads.input.data()[e], numeric));
    }
    out.push(TensorCheck { name: format!("{label}/input"), worst_error: worst, entries_checked: entries.len(), kinks_skipped: 0 });
    Ok(out)
}

fn model_loss(model: &ModelGraph<f64>, x: &Tensor<f64>, labels: &Tensor<f64>) -> Result<(f64, u64)> {
    let out = model.forward(x, Mode::Train)?;
    Ok((model.loss(&out.cache, labels)?, out.cache.relu_pattern()))
}

/// Checks every trainable tensor of `model` against its train-mode
/// cross-entropy on `(x, labels)`.
pub fn check_model<R: Rng + ?Sized>(
    label: &str,
    model: &mut ModelGraph<f64>,
    x: &Tensor<f64>,
    labels: &Tensor<f64>,
    limit: Option<usize>,
    rng: &mut R,
) -> Result<Vec<TensorCheck>> {
    let (_, grads, _) = model.loss_and_grad(x, labels)?;
    let names = model.param_names();
    let mut out = Vec::with_capacity(names.len());
    for (p, analytic) in grads.tensors.iter().enumerate() {
        let entries = pick_entries(analytic.len(), limit, rng);
        let mut worst: f64 = 0.0;
        let mut kinks = 0;
        for &e in &entries {
            let orig = model.params_mut()[p].data()[e];
            model.params_mut()[p].data_mut()[e] = orig + STEP;
            let (plus, plus_pattern) = model_loss(model, x, labels)?;
            model.params_mut()[p].data_mut()[e] = orig - STEP;
            let (minus, minus_pattern) = model_loss(model, x, labels)?;
            model.params_mut()[p].data_mut()[e] = orig;
            if plus_pattern != minus_pattern {
                kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic.data()[e], numeric));
        }
        out.push(TensorCheck {
            name: format!("{label}/{}", names[p]),
            worst_error: worst,
            entries_checked: entries.len() - kinks,
            kinks_skipped: kinks,
        });
    }
    Ok(out)
}

fn uniform<R: Rng + ?Sized>(shape: &[usize], lo: f64, hi: f64, rng: &mut R) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(lo..hi))
}

fn one_hot<R: Rng + ?Sized>(batch: usize, rng: &mut R) -> Tensor<f64> {
    // Alternate classes so both appear, then shuffle the first row's class.
    let flip = rng.random_bool(0.5) as usize;
    Tensor::from_fn(&[batch, 2], |i| if (i / 2 + flip) % 2 == i % 2 { 1.0 } else { 0.0 })
}

/// The configuration used for the exhaustive whole-graph check: every layer
/// type, two conv blocks and two LSTM layers, but small enough to perturb
/// every entry.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        input_features: 12,
        conv_blocks: alloc::vec![
            ConvBlock { filters: 3, kernel_width: 3, pool_window: 2 },
            ConvBlock { filters: 2, kernel_width: 3, pool_window: 2 },
        ],
        dense_trunk: alloc::vec![5, RESHAPE_STEPS],
        lstm_hidden: 3,
        lstm_layers: 2,
        classes: 2,
    }
}

/// Runs the full battery: each layer type on a small random instance, the
/// tiny graph exhaustively, and the default 45-feature graph on a sample of
/// entries per tensor.
pub fn run_all(seed: u64) -> Result<Vec<TensorCheck>> {
    let mut rng = rng::seeded(seed);
    let r = &mut rng;
    let mut out = Vec::new();

    let mut conv = Conv1d::<f64>::init(2, 3, 3, Padding::Same, r);
    conv.bias = uniform(&[3], -0.5, 0.5, r);
    let x = uniform(&[2, 2, 7], -1.0, 1.0, r);
    out.extend(check_layer("conv1d_same", &mut conv, &x, Mode::Train, None, r)?);

    let mut conv = Conv1d::<f64>::new(uniform(&[2, 2, 2], -1.0, 1.0, r), uniform(&[2], -0.5, 0.5, r), 2, Padding::Valid)?;
    let x = uniform(&[2, 2, 7], -1.0, 1.0, r);
    out.extend(check_layer("conv1d_valid_stride2", &mut conv, &x, Mode::Train, None, r)?);

    let mut bn = BatchNorm1d::<f64>::new(3);
    bn.gamma = uniform(&[3], 0.5, 1.5, r);
    bn.beta = uniform(&[3], -0.5, 0.5, r);
    let x = uniform(&[4, 3, 5], -2.0, 2.0, r);
    out.extend(check_layer("batchnorm_train", &mut bn, &x, Mode::Train, None, r)?);
    bn.running_mean = uniform(&[3], -0.5, 0.5, r);
    bn.running_var = uniform(&[3], 0.5, 2.0, r);
    out.extend(check_layer("batchnorm_infer", &mut bn, &x, Mode::Infer, None, r)?);

    let mut pool = AvgPool1d::new(2)?;
    let x = uniform(&[2, 2, 7], -1.0, 1.0, r);
    out.extend(check_layer("avgpool1d", &mut pool, &x, Mode::Train, None, r)?);

    let mut dense = Dense::<f64>::init(4, 3, r);
    dense.bias = uniform(&[3], -0.5, 0.5, r);
    let x = uniform(&[3, 4], -1.0, 1.0, r);
    out.extend(check_layer("dense", &mut dense, &x, Mode::Train, None, r)?);

    for (name, act) in [
        ("relu", Activation::Relu),
        ("sigmoid", Activation::Sigmoid),
        ("tanh", Activation::Tanh),
        ("softmax", Activation::Softmax),
    ] {
        // Keep ReLU inputs away from the kink.
        let x = Tensor::from_fn(&[3, 4], |_| {
            let v: f64 = r.random_range(0.1..2.0);
            if r.random_bool(0.5) { v } else { -v }
        });
        let mut a = act;
        out.extend(check_layer(name, &mut a, &x, Mode::Train, None, r)?);
    }

    let mut lstm = Lstm::<f64>::init(3, 4, LstmOutput::Sequence, r);
    lstm.bias = uniform(&[16], -0.5, 0.5, r);
    let x = uniform(&[2, 5, 3], -1.0, 1.0, r);
    out.extend(check_layer("lstm_sequence", &mut lstm, &x, Mode::Train, None, r)?);
    let mut lstm = Lstm { output: LstmOutput::Last, ..lstm };
    out.extend(check_layer("lstm_last", &mut lstm, &x, Mode::Train, None, r)?);

    let seed_model = r.random::<u64>();
    let mut tiny = ModelGraph::<f64>::build(&tiny_config(), seed_model)?;
    let x = uniform(&[3, 12], -2.0, 2.0, r);
    let labels = one_hot(3, r);
    out.extend(check_model("model_tiny", &mut tiny, &x, &labels, None, r)?);

    let seed_model = r.random::<u64>();
    let mut full = ModelGraph::<f64>::build(&ModelConfig::default(), seed_model)?;
    let x = uniform(&[3, 45], -2.0, 2.0, r);
    let labels = one_hot(3, r);
    out.extend(check_model("model_default", &mut full, &x, &labels, Some(12), r)?);

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((relative_error(0.0, 1e-9) - 1e-5).abs() < 1e-15);
    }

    #[test]
    fn pick_entries_is_sorted_and_distinct() {
        let mut r = rng::seeded(1);
        let e = pick_entries(100, Some(10), &mut r);
        assert_eq!(e.len(), 10);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(pick_entries(5, Some(10), &mut r), alloc::vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn a_broken_gradient_is_caught() {
        // Dense with a wrong upstream: checking the probe against a layer
        // whose forward we scale behind its back must fail.
        struct Scaled(Dense<f64>);
        impl Layer<f64> for Scaled {
            type Cache = crate::nn::DenseCache<f64>;
            fn forward(&self, x: &Tensor<f64>, mode: Mode) -> Result<(Tensor<f64>, Self::Cache)> {
                let (y, c) = self.0.forward(x, mode)?;
                Ok((y.map(|v| 1.01 * v), c))
            }
            fn backward(&self, c: &Self::Cache, g: &Tensor<f64>) -> Result<crate::nn::LayerGrads<f64>> {
                self.0.backward(c, g)
            }
            fn params(&self) -> Vec<&Tensor<f64>> {
                self.0.params()
            }
            fn params_mut(&mut self) -> Vec<&mut Tensor<f64>> {
                self.0.params_mut()
            }
            fn param_names(&self) -> &'static [&'static str] {
                self.0.param_names()
            }
        }
        let mut r = rng::seeded(3);
        let mut layer = Scaled(Dense::init(3, 2, &mut r));
        let x = uniform(&[2, 3], -1.0, 1.0, &mut r);
        let checks = check_layer("scaled", &mut layer, &x, Mode::Train, None, &mut r).unwrap();
        assert!(checks.iter().all(|c| !c.passes(1e-3)));
    }
}
