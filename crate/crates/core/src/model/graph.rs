use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::config::{ModelConfig, CLASSES, RESHAPE_STEPS};
use crate::error::{shape_err, Error, Result};
use crate::nn::activation::log_softmax_last_axis;
use crate::nn::{
    Activation, ActivationCache, AvgPool1d, AvgPoolCache, BatchNorm1d, BatchNormCache, Conv1d,
    Conv1dCache, Dense, DenseCache, Layer, LayerGrads, Lstm, LstmCache, LstmOutput, Mode,
};
use crate::real::Real;
use crate::rng;
use crate::tensor::Tensor;

/// Conv -> BatchNorm -> ReLU -> AvgPool.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvStage<T> {
    pub conv: Conv1d<T>,
    pub norm: BatchNorm1d<T>,
    pub pool: AvgPool1d,
}

/// Instantiated model: layers plus the config they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph<T> {
    config: ModelConfig,
    pub conv_stages: Vec<ConvStage<T>>,
    /// ReLU dense layers; the last one is 16 wide.
    pub dense_trunk: Vec<Dense<T>>,
    /// Dense(2) + softmax.
    pub head_a: Dense<T>,
    /// All but the last return full sequences.
    pub lstm_stack: Vec<Lstm<T>>,
    /// Dense(2) + sigmoid.
    pub head_b: Dense<T>,
    /// Dense(2) + softmax over the concatenated heads.
    pub output: Dense<T>,
}

/// Gradients of every trainable tensor, aligned with [`ModelGraph::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Tensor<T>>,
}

#[derive(Debug)]
struct ConvStageCache<T> {
    conv: Conv1dCache<T>,
    norm: BatchNormCache<T>,
    relu: ActivationCache<T>,
    pool: AvgPoolCache,
    /// `[batch, channels, length]` after pooling, used to unflatten.
    pooled_shape: Vec<usize>,
}

/// State retained by [`ModelGraph::forward`] for the backward pass.
#[derive(Debug)]
pub struct ForwardCache<T> {
    mode: Mode,
    batch: usize,
    conv: Vec<ConvStageCache<T>>,
    dense: Vec<(DenseCache<T>, ActivationCache<T>)>,
    head_a: (DenseCache<T>, ActivationCache<T>),
    lstm: Vec<LstmCache<T>>,
    head_b: (DenseCache<T>, ActivationCache<T>),
    output: DenseCache<T>,
    log_probs: Tensor<T>,
}

#[derive(Debug)]
pub struct ForwardOutput<T> {
    /// Final softmax probabilities `[batch, 2]`.
    pub probabilities: Tensor<T>,
    /// Head A softmax `[batch, 2]`.
    pub head_a: Tensor<T>,
    /// Head B sigmoid `[batch, 2]`.
    pub head_b: Tensor<T>,
    /// Pre-softmax output `[batch, 2]`.
    pub logits: Tensor<T>,
    pub cache: ForwardCache<T>,
}

/// Structural summary used to check the built graph against the intended
/// architecture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input_width: usize,
    pub trunk_output_width: usize,
    /// `[steps, features]` fed to the first LSTM.
    pub lstm_input_shape: [usize; 2],
    /// `(input_kernel, recurrent_kernel)` shapes per LSTM layer.
    pub lstm_kernels: Vec<([usize; 2], [usize; 2])>,
    pub lstm_returns: Vec<LstmOutput>,
    pub head_a: (usize, Activation),
    pub head_b: (usize, Activation),
    pub concat_width: usize,
    pub output: (usize, Activation),
}

impl<T: Real> ModelGraph<T> {
    /// Builds a freshly initialized model. The same `(config, seed)` always
    /// yields bit-identical parameters.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::seeded(seed);
        let padding = ModelConfig::PADDING;

        let mut conv_stages = Vec::with_capacity(config.conv_blocks.len());
        let mut channels = 1;
        for b in &config.conv_blocks {
            conv_stages.push(ConvStage {
                conv: Conv1d::init(channels, b.filters, b.kernel_width, padding, &mut rng),
                norm: BatchNorm1d::new(b.filters),
                pool: AvgPool1d::new(b.pool_window)?,
            });
            channels = b.filters;
        }

        let mut width = config.flattened_width()?;
        let mut dense_trunk = Vec::with_capacity(config.dense_trunk.len());
        for &w in &config.dense_trunk {
            dense_trunk.push(Dense::init(width, w, &mut rng));
            width = w;
        }
        let head_a = Dense::init(RESHAPE_STEPS, CLASSES, &mut rng);

        let mut lstm_stack = Vec::with_capacity(config.lstm_layers);
        let mut input_dim = 1;
        for i in 0..config.lstm_layers {
            let output = if i + 1 == config.lstm_layers { LstmOutput::Last } else { LstmOutput::Sequence };
            lstm_stack.push(Lstm::init(input_dim, config.lstm_hidden, output, &mut rng));
            input_dim = config.lstm_hidden;
        }
        let head_b = Dense::init(config.lstm_hidden, CLASSES, &mut rng);
        let output = Dense::init(2 * CLASSES, CLASSES, &mut rng);

        Ok(Self { config: config.clone(), conv_stages, dense_trunk, head_a, lstm_stack, head_b, output })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn input_features(&self) -> usize {
        self.config.input_features
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_width: self.config.input_features,
            trunk_output_width: self.dense_trunk.last().map_or(0, |d| d.outputs()),
            lstm_input_shape: [RESHAPE_STEPS, self.lstm_stack[0].input_dim()],
            lstm_kernels: self
                .lstm_stack
                .iter()
                .map(|l| {
                    let i = l.input_kernel.shape();
                    let r = l.recurrent_kernel.shape();
                    ([i[0], i[1]], [r[0], r[1]])
                })
                .collect(),
            lstm_returns: self.lstm_stack.iter().map(|l| l.output).collect(),
            head_a: (self.head_a.outputs(), Activation::Softmax),
            head_b: (self.head_b.outputs(), Activation::Sigmoid),
            concat_width: self.output.inputs(),
            output: (self.output.outputs(), Activation::Softmax),
        }
    }

    /// Trainable tensors in canonical order.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for s in &self.conv_stages {
            out.extend(s.conv.params());
            out.extend(s.norm.params());
        }
        for d in &self.dense_trunk {
            out.extend(d.params());
        }
        out.extend(self.head_a.params());
        for l in &self.lstm_stack {
            out.extend(l.params());
        }
        out.extend(self.head_b.params());
        out.extend(self.output.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for s in &mut self.conv_stages {
            out.extend(s.conv.params_mut());
            out.extend(s.norm.params_mut());
        }
        for d in &mut self.dense_trunk {
            out.extend(d.params_mut());
        }
        out.extend(self.head_a.params_mut());
        for l in &mut self.lstm_stack {
            out.extend(l.params_mut());
        }
        out.extend(self.head_b.params_mut());
        out.extend(self.output.params_mut());
        out
    }

    /// Names aligned with [`ModelGraph::params`].
    pub fn param_names(&self) -> Vec<String> {
        self.named_tensors().into_iter().filter(|(_, _, trainable)| *trainable).map(|(n, _, _)| n).collect()
    }

    /// Every tensor needed to reproduce inference, including batch-norm
    /// running statistics, in serialization order: `(name, tensor, trainable)`.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>, bool)> {
        fn push<'a, T>(
            out: &mut Vec<(String, &'a Tensor<T>, bool)>,
            prefix: &str,
            names: &[&str],
            ts: Vec<&'a Tensor<T>>,
            trainable: bool,
        ) {
            for (n, t) in names.iter().zip(ts) {
                out.push((format!("{prefix}.{n}"), t, trainable));
            }
        }
        let mut out = Vec::new();
        let out_ref = &mut out;
        for (i, s) in self.conv_stages.iter().enumerate() {
            push(out_ref, &format!("conv{i}"), s.conv.param_names(), s.conv.params(), true);
            push(out_ref, &format!("bn{i}"), s.norm.param_names(), s.norm.params(), true);
            push(out_ref, &format!("bn{i}"), &["running_mean", "running_var"], s.norm.state(), false);
        }
        for (i, d) in self.dense_trunk.iter().enumerate() {
            push(out_ref, &format!("dense{i}"), d.param_names(), d.params(), true);
        }
        push(out_ref, "head_a", self.head_a.param_names(), self.head_a.params(), true);
        for (i, l) in self.lstm_stack.iter().enumerate() {
            push(out_ref, &format!("lstm{i}"), l.param_names(), l.params(), true);
        }
        push(out_ref, "head_b", self.head_b.param_names(), self.head_b.params(), true);
        push(out_ref, "output", self.output.param_names(), self.output.params(), true);
        out
    }

    fn named_tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for s in &mut self.conv_stages {
            out.extend(s.conv.params_mut());
            out.extend(s.norm.tensors_mut());
        }
        for d in &mut self.dense_trunk {
            out.extend(d.params_mut());
        }
        out.extend(self.head_a.params_mut());
        for l in &mut self.lstm_stack {
            out.extend(l.params_mut());
        }
        out.extend(self.head_b.params_mut());
        out.extend(self.output.params_mut());
        out
    }

    /// Replaces every tensor from `(name, tensor)` pairs, which must match
    /// [`ModelGraph::named_tensors`] in order, names and shapes.
    pub fn load_named(config: &ModelConfig, tensors: Vec<(String, Tensor<T>)>) -> Result<Self> {
        let mut model = Self::build(config, 0)?;
        let expected: Vec<(String, Vec<usize>)> =
            model.named_tensors().into_iter().map(|(n, t, _)| (n, t.shape().to_vec())).collect();
        if expected.len() != tensors.len() {
            return Err(Error::MalformedWeights(format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, shape), (got_name, got)) in expected.iter().zip(&tensors) {
            if name != got_name || shape.as_slice() != got.shape() {
                return Err(Error::MalformedWeights(format!(
                    "expected {name} {shape:?}, found {got_name} {:?}",
                    got.shape()
                )));
            }
        }
        for (slot, (_, t)) in model.named_tensors_mut().into_iter().zip(tensors) {
            *slot = t;
        }
        Ok(model)
    }

    /// Same model at another precision.
    pub fn cast<U: Real>(&self) -> ModelGraph<U> {
        let named = self.named_tensors().into_iter().map(|(n, t, _)| (n, t.cast::<U>())).collect();
        ModelGraph::load_named(&self.config, named).expect("identical structure")
    }

    /// Runs the full graph on `[batch, features]`.
    ///
    /// Never mutates the model. In train mode batch normalization uses batch
    /// statistics; call [`ModelGraph::commit_batch_stats`] to fold them into
    /// the running statistics.
    pub fn forward(&self, x: &Tensor<T>, mode: Mode) -> Result<ForwardOutput<T>> {
        let (batch, features) = x.dims2()?;
        if features != self.config.input_features {
            return Err(shape_err!(
                "model expects {} features, got {}",
                self.config.input_features,
                features
            ));
        }

        let mut h = x.reshape(&[batch, 1, features])?;
        let mut conv_caches = Vec::with_capacity(self.conv_stages.len());
        for s in &self.conv_stages {
            let (y, conv) = s.conv.forward(&h, mode)?;
            let (y, norm) = s.norm.forward(&y, mode)?;
            let (y, relu) = Activation::Relu.forward(&y, mode)?;
            let (y, pool) = s.pool.forward(&y, mode)?;
            conv_caches.push(ConvStageCache { conv, norm, relu, pool, pooled_shape: y.shape().to_vec() });
            h = y;
        }
        let flat = h.len() / batch;
        let mut h = h.into_reshape(&[batch, flat])?;

        let mut dense_caches = Vec::with_capacity(self.dense_trunk.len());
        for d in &self.dense_trunk {
            let (y, dc) = d.forward(&h, mode)?;
            let (y, ac) = Activation::Relu.forward(&y, mode)?;
            dense_caches.push((dc, ac));
            h = y;
        }
        let trunk = h;

        let (za, a_dense) = self.head_a.forward(&trunk, mode)?;
        let (head_a, a_act) = Activation::Softmax.forward(&za, mode)?;

        let mut seq = trunk.reshape(&[batch, RESHAPE_STEPS, 1])?;
        let mut lstm_caches = Vec::with_capacity(self.lstm_stack.len());
        for l in &self.lstm_stack {
            let (y, c) = l.forward(&seq, mode)?;
            lstm_caches.push(c);
            seq = y;
        }
        let (zb, b_dense) = self.head_b.forward(&seq, mode)?;
        let (head_b, b_act) = Activation::Sigmoid.forward(&zb, mode)?;

        let mut concat = Vec::with_capacity(batch * 2 * CLASSES);
        for (ra, rb) in head_a.data().chunks_exact(CLASSES).zip(head_b.data().chunks_exact(CLASSES)) {
            concat.extend_from_slice(ra);
            concat.extend_from_slice(rb);
        }
        let concat = Tensor::new(&[batch, 2 * CLASSES], concat)?;
        let (logits, out_cache) = self.output.forward(&concat, mode)?;
        let probabilities = Activation::Softmax.apply(&logits);
        let log_probs = log_softmax_last_axis(&logits);

        Ok(ForwardOutput {
            probabilities,
            head_a: head_a.clone(),
            head_b: head_b.clone(),
            logits,
            cache: ForwardCache {
                mode,
                batch,
                conv: conv_caches,
                dense: dense_caches,
                head_a: (a_dense, a_act),
                lstm: lstm_caches,
                head_b: (b_dense, b_act),
                output: out_cache,
                log_probs,
            },
        })
    }

    /// Folds train-mode batch statistics into the batch-norm running stats.
    pub fn commit_batch_stats(&mut self, cache: &ForwardCache<T>) {
        for (s, c) in self.conv_stages.iter_mut().zip(&cache.conv) {
            s.norm.update_running(&c.norm);
        }
    }

    /// Mean categorical cross-entropy of the final softmax against one-hot
    /// `labels` `[batch, 2]`.
    pub fn loss(&self, cache: &ForwardCache<T>, labels: &Tensor<T>) -> Result<T> {
        labels.expect_shape(&[cache.batch, CLASSES])?;
        let total = cache
            .log_probs
            .data()
            .iter()
            .zip(labels.data())
            .fold(T::ZERO, |acc, (&lp, &y)| if y == T::ZERO { acc } else { acc - y * lp });
        Ok(total / T::from_f64(cache.batch as f64))
    }

    /// Backpropagates the cross-entropy loss through both heads, the
    /// concatenation and the trunk.
    pub fn backward(&self, cache: &ForwardCache<T>, labels: &Tensor<T>) -> Result<Gradients<T>> {
        let batch = cache.batch;
        labels.expect_shape(&[batch, CLASSES])?;
        let inv_b = T::ONE / T::from_f64(batch as f64);

        // d loss / d logits = (p * sum(y) - y) / B
        let mut d_logits = Vec::with_capacity(batch * CLASSES);
        for (lp, y) in cache.log_probs.data().chunks_exact(CLASSES).zip(labels.data().chunks_exact(CLASSES)) {
            let ysum = y.iter().fold(T::ZERO, |a, &v| a + v);
            for k in 0..CLASSES {
                d_logits.push((lp[k].exp() * ysum - y[k]) * inv_b);
            }
        }
        let d_logits = Tensor::new(&[batch, CLASSES], d_logits)?;

        let g_out = self.output.backward(&cache.output, &d_logits)?;
        let mut d_a = Vec::with_capacity(batch * CLASSES);
        let mut d_b = Vec::with_capacity(batch * CLASSES);
        for row in g_out.input.data().chunks_exact(2 * CLASSES) {
            d_a.extend_from_slice(&row[..CLASSES]);
            d_b.extend_from_slice(&row[CLASSES..]);
        }
        let d_a = Tensor::new(&[batch, CLASSES], d_a)?;
        let d_b = Tensor::new(&[batch, CLASSES], d_b)?;

        // Head B and the LSTM stack.
        let g = Activation::Sigmoid.backward(&cache.head_b.1, &d_b)?;
        let g_head_b = self.head_b.backward(&cache.head_b.0, &g.input)?;
        let mut upstream = g_head_b.input.clone();
        let mut lstm_grads: Vec<LayerGrads<T>> = Vec::with_capacity(self.lstm_stack.len());
        for (l, c) in self.lstm_stack.iter().zip(&cache.lstm).rev() {
            let g = l.backward(c, &upstream)?;
            upstream = g.input.clone();
            lstm_grads.push(g);
        }
        lstm_grads.reverse();
        let d_trunk_b = upstream.into_reshape(&[batch, RESHAPE_STEPS])?;

        // Head A.
        let g = Activation::Softmax.backward(&cache.head_a.1, &d_a)?;
        let g_head_a = self.head_a.backward(&cache.head_a.0, &g.input)?;
        let mut upstream = g_head_a.input.zip_map(&d_trunk_b, |a, b| a + b)?;

        // Dense trunk.
        let mut dense_grads = Vec::with_capacity(self.dense_trunk.len());
        for (d, (dc, ac)) in self.dense_trunk.iter().zip(&cache.dense).rev() {
            let g = Activation::Relu.backward(ac, &upstream)?;
            let g = d.backward(dc, &g.input)?;
            upstream = g.input.clone();
            dense_grads.push(g);
        }
        dense_grads.reverse();

        // Conv trunk.
        let mut conv_grads = Vec::with_capacity(self.conv_stages.len());
        if let Some(last) = cache.conv.last() {
            upstream = upstream.into_reshape(&last.pooled_shape)?;
        }
        for (s, c) in self.conv_stages.iter().zip(&cache.conv).rev() {
            let g = Layer::<T>::backward(&s.pool, &c.pool, &upstream)?;
            let g = Activation::Relu.backward(&c.relu, &g.input)?;
            let g_norm = s.norm.backward(&c.norm, &g.input)?;
            let g_conv = s.conv.backward(&c.conv, &g_norm.input)?;
            upstream = g_conv.input.clone();
            conv_grads.push((g_conv, g_norm));
        }
        conv_grads.reverse();

        let mut tensors = Vec::new();
        for (gc, gn) in conv_grads {
            tensors.extend(gc.params);
            tensors.extend(gn.params);
        }
        for g in dense_grads {
            tensors.extend(g.params);
        }
        tensors.extend(g_head_a.params);
        for g in lstm_grads {
            tensors.extend(g.params);
        }
        tensors.extend(g_head_b.params);
        tensors.extend(g_out.params);
        Ok(Gradients { tensors })
    }

    /// Train-mode forward, loss and full gradient on one batch.
    pub fn loss_and_grad(&self, x: &Tensor<T>, labels: &Tensor<T>) -> Result<(T, Gradients<T>, ForwardCache<T>)> {
        let out = self.forward(x, Mode::Train)?;
        let loss = self.loss(&out.cache, labels)?;
        let grads = self.backward(&out.cache, labels)?;
        Ok((loss, grads, out.cache))
    }
}

impl<T: Real> ForwardCache<T> {
    /// Hash of the sign pattern of every ReLU input in the graph.
    pub fn relu_pattern(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325;
        for c in &self.conv {
            c.relu.fold_signs(&mut h);
        }
        for (_, a) in &self.dense {
            a.fold_signs(&mut h);
        }
        h
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConvBlock;
    use alloc::vec;
    use rand::Rng;

    fn small() -> ModelConfig {
        ModelConfig {
            input_features: 10,
            conv_blocks: vec![ConvBlock { filters: 3, kernel_width: 3, pool_window: 2 }],
            dense_trunk: vec![5, RESHAPE_STEPS],
            lstm_hidden: 4,
            lstm_layers: 2,
            classes: 2,
        }
    }

    fn random_input(batch: usize, features: usize, seed: u64) -> Tensor<f64> {
        let mut r = rng::seeded(seed);
        Tensor::from_fn(&[batch, features], |_| r.random_range(-2.0..2.0))
    }

    #[test]
    fn build_is_deterministic() {
        let a = ModelGraph::<f32>::build(&ModelConfig::default(), 42).unwrap();
        let b = ModelGraph::<f32>::build(&ModelConfig::default(), 42).unwrap();
        for (x, y) in a.params().iter().zip(b.params()) {
            let xb: Vec<u32> = x.data().iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u32> = y.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb);
        }
        let c = ModelGraph::<f32>::build(&ModelConfig::default(), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn lstm_kernel_shapes() {
        let m = ModelGraph::<f32>::build(&ModelConfig::default(), 42).unwrap();
        assert_eq!(m.lstm_stack[0].input_kernel.shape(), &[1, 256]);
        assert_eq!(m.lstm_stack[0].recurrent_kernel.shape(), &[64, 256]);
        assert_eq!(m.lstm_stack[1].input_kernel.shape(), &[64, 256]);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = ModelConfig { dense_trunk: vec![8], ..ModelConfig::default() };
        assert_eq!(ModelGraph::<f32>::build(&cfg, 1).unwrap_err().name(), "InvalidConfig");
    }

    #[test]
    fn output_rows_are_distributions() {
        let m = ModelGraph::<f64>::build(&small(), 3).unwrap();
        let out = m.forward(&random_input(6, 10, 1), Mode::Infer).unwrap();
        for row in out.probabilities.data().chunks(2) {
            assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
        }
        assert!(out.head_b.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn identical_rows_give_identical_outputs() {
        let m = ModelGraph::<f32>::build(&ModelConfig::default(), 9).unwrap();
        let row: Vec<f32> = (0..45).map(|i| libm::sinf(i as f32 * 0.3)).collect();
        let x = Tensor::new(&[4, 45], row.repeat(4)).unwrap();
        let out = m.forward(&x, Mode::Infer).unwrap();
        let p = out.probabilities.data();
        for r in 1..4 {
            assert_eq!(&p[r * 2..r * 2 + 2], &p[0..2]);
        }
    }

    #[test]
    fn wrong_feature_count() {
        let m = ModelGraph::<f64>::build(&small(), 3).unwrap();
        let err = m.forward(&random_input(2, 11, 1), Mode::Infer).unwrap_err();
        assert_eq!(err.name(), "ShapeMismatch");
    }

    #[test]
    fn uniform_output_costs_ln2() {
        let mut m = ModelGraph::<f64>::build(&small(), 3).unwrap();
        m.output.weights = Tensor::zeros(&[4, 2]);
        let out = m.forward(&random_input(3, 10, 2), Mode::Train).unwrap();
        let labels = Tensor::new(&[3, 2], vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        let loss = m.loss(&out.cache, &labels).unwrap();
        assert!((loss - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn gradient_count_matches_params() {
        let m = ModelGraph::<f64>::build(&small(), 3).unwrap();
        let labels = Tensor::new(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (_, g, _) = m.loss_and_grad(&random_input(2, 10, 4), &labels).unwrap();
        assert_eq!(g.tensors.len(), m.params().len());
        assert_eq!(m.param_names().len(), m.params().len());
        for (t, p) in g.tensors.iter().zip(m.params()) {
            assert_eq!(t.shape(), p.shape());
        }
    }

    #[test]
    fn cast_roundtrip_preserves_structure() {
        let m = ModelGraph::<f32>::build(&small(), 8).unwrap();
        let back: ModelGraph<f32> = m.cast::<f64>().cast();
        assert_eq!(m, back);
    }

    #[test]
    fn commit_updates_running_stats() {
        let mut m = ModelGraph::<f64>::build(&small(), 3).unwrap();
        let before = m.conv_stages[0].norm.running_mean.clone();
        let out = m.forward(&random_input(4, 10, 5), Mode::Train).unwrap();
        m.commit_batch_stats(&out.cache);
        assert_ne!(before, m.conv_stages[0].norm.running_mean);
    }
}
