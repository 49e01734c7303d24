use alloc::vec;
use alloc::vec::Vec;

use super::{Layer, LayerGrads, Mode};
use crate::error::{shape_err, Error, Result};
use crate::real::Real;
use crate::tensor::{fingerprint, Tensor};

/// Weight of the previous running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPSILON: f64 = 1e-5;

/// Per-channel batch normalization over `[batch, channels]` or
/// `[batch, channels, length]` inputs. Statistics pool the batch and length
/// axes.
///
/// `forward` never mutates the layer. In train mode the batch statistics are
/// returned in the cache and folded into the running statistics by
/// [`BatchNorm1d::update_running`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm1d<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub epsilon: T,
    pub momentum: T,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    input_shape: Vec<usize>,
    mode: Mode,
    /// Normalized input, same layout as the input.
    xhat: Vec<T>,
    inv_std: Vec<T>,
    batch_mean: Vec<T>,
    batch_var: Vec<T>,
    fingerprint: u64,
}

impl<T> BatchNormCache<T> {
    pub fn mode(&self) -> Mode {
        self.mode
    }
}

/// `(batch, channels, length)` view of a rank-2 or rank-3 input.
fn layout<T: Real>(x: &Tensor<T>) -> Result<(usize, usize, usize)> {
    match x.shape()[..] {
        [b, c] => Ok((b, c, 1)),
        [b, c, l] => Ok((b, c, l)),
        _ => Err(shape_err!("batchnorm expects rank 2 or 3, got {:?}", x.shape())),
    }
}

impl<T: Real> BatchNorm1d<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::full(&[channels], T::ONE),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], T::ONE),
            epsilon: T::from_f64(BN_EPSILON),
            momentum: T::from_f64(BN_MOMENTUM),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Non-trainable state, in serialization order.
    pub fn state(&self) -> Vec<&Tensor<T>> {
        vec![&self.running_mean, &self.running_var]
    }

    /// Trainable parameters followed by the running statistics.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.gamma, &mut self.beta, &mut self.running_mean, &mut self.running_var]
    }

    /// Folds the batch statistics of a train-mode cache into the running
    /// statistics. Infer-mode caches are ignored.
    pub fn update_running(&mut self, cache: &BatchNormCache<T>) {
        if cache.mode != Mode::Train {
            return;
        }
        let m = self.momentum;
        let one_minus = T::ONE - m;
        for (r, &b) in self.running_mean.data_mut().iter_mut().zip(&cache.batch_mean) {
            *r = m * *r + one_minus * b;
        }
        for (r, &b) in self.running_var.data_mut().iter_mut().zip(&cache.batch_var) {
            *r = m * *r + one_minus * b;
        }
    }

    fn fingerprint(&self, mode: Mode) -> u64 {
        match mode {
            Mode::Train => fingerprint(&[&self.gamma, &self.beta]),
            Mode::Infer => fingerprint(&[&self.gamma, &self.beta, &self.running_mean, &self.running_var]),
        }
    }
}

impl<T: Real> Layer<T> for BatchNorm1d<T> {
    type Cache = BatchNormCache<T>;

    fn forward(&self, x: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, Self::Cache)> {
        let (batch, ch, len) = layout(x)?;
        if ch != self.channels() {
            return Err(shape_err!("batchnorm expects {} channels, got {}", self.channels(), ch));
        }
        let (mean, var) = match mode {
            Mode::Train => {
                if batch < 2 {
                    return Err(Error::DegenerateInput(
                        "train-mode batch normalization needs a batch of at least 2".into(),
                    ));
                }
                let count = T::from_f64((batch * len) as f64);
                let mut mean = vec![T::ZERO; ch];
                let mut var = vec![T::ZERO; ch];
                for b in 0..batch {
                    for c in 0..ch {
                        for &v in &x.data()[(b * ch + c) * len..][..len] {
                            mean[c] += v;
                        }
                    }
                }
                mean.iter_mut().for_each(|m| *m /= count);
                for b in 0..batch {
                    for c in 0..ch {
                        for &v in &x.data()[(b * ch + c) * len..][..len] {
                            let d = v - mean[c];
                            var[c] += d * d;
                        }
                    }
                }
                var.iter_mut().for_each(|v| *v /= count);
                (mean, var)
            }
            Mode::Infer => (self.running_mean.data().to_vec(), self.running_var.data().to_vec()),
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::ONE / (v + self.epsilon).sqrt()).collect();

        let mut xhat = vec![T::ZERO; x.len()];
        let mut out = vec![T::ZERO; x.len()];
        for b in 0..batch {
            for c in 0..ch {
                let base = (b * ch + c) * len;
                let (g, be) = (self.gamma.data()[c], self.beta.data()[c]);
                for k in base..base + len {
                    let h = (x.data()[k] - mean[c]) * inv_std[c];
                    xhat[k] = h;
                    out[k] = g * h + be;
                }
            }
        }
        let cache = BatchNormCache {
            input_shape: x.shape().to_vec(),
            mode,
            xhat,
            inv_std,
            batch_mean: mean,
            batch_var: var,
            fingerprint: self.fingerprint(mode),
        };
        Ok((Tensor::new(x.shape(), out)?, cache))
    }

    fn backward(&self, cache: &Self::Cache, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
        if cache.fingerprint != self.fingerprint(cache.mode) {
            return Err(Error::StaleCache);
        }
        upstream.expect_shape(&cache.input_shape)?;
        let (batch, ch, len) = layout(upstream)?;
        let g = upstream.data();

        let mut dgamma = vec![T::ZERO; ch];
        let mut dbeta = vec![T::ZERO; ch];
        for b in 0..batch {
            for c in 0..ch {
                let base = (b * ch + c) * len;
                for k in base..base + len {
                    dgamma[c] += g[k] * cache.xhat[k];
                    dbeta[c] += g[k];
                }
            }
        }

        let mut dx = vec![T::ZERO; g.len()];
        match cache.mode {
            Mode::Train => {
                // dx = gamma * inv_std / N * (N * g - sum(g) - xhat * sum(g * xhat))
                let n = T::from_f64((batch * len) as f64);
                for b in 0..batch {
                    for c in 0..ch {
                        let scale = self.gamma.data()[c] * cache.inv_std[c] / n;
                        let base = (b * ch + c) * len;
                        for k in base..base + len {
                            dx[k] = scale * (n * g[k] - dbeta[c] - cache.xhat[k] * dgamma[c]);
                        }
                    }
                }
            }
            Mode::Infer => {
                for b in 0..batch {
                    for c in 0..ch {
                        let scale = self.gamma.data()[c] * cache.inv_std[c];
                        let base = (b * ch + c) * len;
                        for k in base..base + len {
                            dx[k] = scale * g[k];
                        }
                    }
                }
            }
        }
        Ok(LayerGrads {
            params: vec![Tensor::new(&[ch], dgamma)?, Tensor::new(&[ch], dbeta)?],
            input: Tensor::new(&cache.input_shape, dx)?,
        })
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["gamma", "beta"]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn infer_identity_configuration() {
        let bn = BatchNorm1d::<f64>::new(3);
        let x = Tensor::from_fn(&[2, 3, 4], |i| i as f64 - 10.0);
        let (y, _) = bn.forward(&x, Mode::Infer).unwrap();
        let s = 1.0 / libm::sqrt(1.0 + BN_EPSILON);
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b * s).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_channel_maps_to_beta() {
        let mut bn = BatchNorm1d::<f64>::new(2);
        bn.beta = Tensor::new(&[2], vec![0.25, -1.5]).unwrap();
        let x = Tensor::from_fn(&[4, 2], |i| if i % 2 == 0 { 3.0 } else { -7.0 });
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        for row in y.data().chunks(2) {
            assert_eq!(row, &[0.25, -1.5]);
        }
    }

    #[test]
    fn plus_minus_one_batch() {
        let bn = BatchNorm1d::<f64>::new(2);
        let x = Tensor::new(&[2, 2], vec![-1.0, -1.0, 1.0, 1.0]).unwrap();
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        let expect = 1.0 / libm::sqrt(1.0 + BN_EPSILON);
        assert!((y.data()[0] + expect).abs() < 1e-12);
        assert!((y.data()[3] - expect).abs() < 1e-12);
        assert!((y.data()[0] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn batch_of_one_rejected_in_train_mode() {
        let bn = BatchNorm1d::<f64>::new(2);
        let err = bn.forward(&Tensor::zeros(&[1, 2, 5]), Mode::Train).unwrap_err();
        assert_eq!(err.name(), "DegenerateInput");
        assert!(bn.forward(&Tensor::zeros(&[1, 2, 5]), Mode::Infer).is_ok());
    }

    #[test]
    fn train_outputs_are_standardized() {
        let mut rng = crate::rng::seeded(11);
        let bn = BatchNorm1d::<f64>::new(3);
        let x = Tensor::from_fn(&[16, 3, 5], |i| rng.random_range(-4.0..9.0) + (i % 3) as f64 * 10.0);
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        for c in 0..3 {
            let vals: Vec<f64> = (0..16)
                .flat_map(|b| y.data()[(b * 3 + c) * 5..][..5].to_vec())
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-3);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn running_update_uses_momentum() {
        let mut bn = BatchNorm1d::<f64>::new(1);
        let x = Tensor::new(&[2, 1], vec![1.0, 3.0]).unwrap();
        let (_, cache) = bn.forward(&x, Mode::Train).unwrap();
        bn.update_running(&cache);
        assert!((bn.running_mean.data()[0] - 0.2).abs() < 1e-12);
        assert!((bn.running_var.data()[0] - (0.9 + 0.1 * 1.0)).abs() < 1e-12);
    }
}
