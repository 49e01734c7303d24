use alloc::vec;
use alloc::vec::Vec;

use super::{Layer, LayerGrads, Mode};
use crate::error::{shape_err, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Parameter-free nonlinearity. Softmax normalizes over the last axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
}

#[derive(Debug, Clone)]
pub struct ActivationCache<T> {
    input: Tensor<T>,
    output: Tensor<T>,
}

impl<T: Real> ActivationCache<T> {
    /// Folds the sign of every input (`> 0`) into `hash`. Two forward passes
    /// with equal sign hashes took the same side of every ReLU kink.
    pub fn fold_signs(&self, hash: &mut u64) {
        for &v in self.input.data() {
            *hash = (*hash ^ (v > T::ZERO) as u64).wrapping_mul(0x0000_0100_0000_01b3).rotate_left(1);
        }
    }
}

impl Activation {
    pub fn apply<T: Real>(self, x: &Tensor<T>) -> Tensor<T> {
        match self {
            Activation::Relu => x.map(|v| if v > T::ZERO { v } else { T::ZERO }),
            Activation::Sigmoid => x.map(Real::sigmoid),
            Activation::Tanh => x.map(Real::tanh),
            Activation::Softmax => softmax_last_axis(x),
        }
    }

    /// Input gradient given the forward input, output and upstream gradient.
    fn input_grad<T: Real>(self, input: &Tensor<T>, output: &Tensor<T>, g: &Tensor<T>) -> Tensor<T> {
        let mut dx = vec![T::ZERO; g.len()];
        match self {
            Activation::Relu => {
                for ((d, &x), &gv) in dx.iter_mut().zip(input.data()).zip(g.data()) {
                    *d = if x > T::ZERO { gv } else { T::ZERO };
                }
            }
            Activation::Sigmoid => {
                for ((d, &y), &gv) in dx.iter_mut().zip(output.data()).zip(g.data()) {
                    *d = gv * y * (T::ONE - y);
                }
            }
            Activation::Tanh => {
                for ((d, &y), &gv) in dx.iter_mut().zip(output.data()).zip(g.data()) {
                    *d = gv * (T::ONE - y * y);
                }
            }
            Activation::Softmax => {
                let cols = *output.shape().last().expect("rank >= 1");
                for ((d, y), gv) in dx
                    .chunks_exact_mut(cols)
                    .zip(output.data().chunks_exact(cols))
                    .zip(g.data().chunks_exact(cols))
                {
                    let dot = y.iter().zip(gv).fold(T::ZERO, |acc, (&a, &b)| acc + a * b);
                    for k in 0..cols {
                        d[k] = y[k] * (gv[k] - dot);
                    }
                }
            }
        }
        Tensor::new(g.shape(), dx).expect("shape preserved")
    }
}

/// Row-wise softmax over the last axis, with max subtraction.
pub(crate) fn softmax_last_axis<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let cols = *x.shape().last().expect("rank >= 1");
    let mut out: Vec<T> = Vec::with_capacity(x.len());
    for row in x.data().chunks_exact(cols) {
        let m = row.iter().fold(row[0], |a, &b| a.max(b));
        let start = out.len();
        let mut total = T::ZERO;
        for &v in row {
            let e = (v - m).exp();
            total += e;
            out.push(e);
        }
        for v in &mut out[start..] {
            *v /= total;
        }
    }
    Tensor::new(x.shape(), out).expect("shape preserved")
}

/// Row-wise `log(softmax(x))` over the last axis.
pub(crate) fn log_softmax_last_axis<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let cols = *x.shape().last().expect("rank >= 1");
    let mut out: Vec<T> = Vec::with_capacity(x.len());
    for row in x.data().chunks_exact(cols) {
        let m = row.iter().fold(row[0], |a, &b| a.max(b));
        let lse = m + row.iter().fold(T::ZERO, |acc, &v| acc + (v - m).exp()).ln();
        out.extend(row.iter().map(|&v| v - lse));
    }
    Tensor::new(x.shape(), out).expect("shape preserved")
}

impl<T: Real> Layer<T> for Activation {
    type Cache = ActivationCache<T>;

    fn forward(&self, x: &Tensor<T>, _mode: Mode) -> Result<(Tensor<T>, Self::Cache)> {
        let y = self.apply(x);
        Ok((y.clone(), ActivationCache { input: x.clone(), output: y }))
    }

    fn backward(&self, cache: &Self::Cache, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
        if upstream.shape() != cache.output.shape() {
            return Err(shape_err!(
                "upstream gradient {:?} does not match activation output {:?}",
                upstream.shape(),
                cache.output.shape()
            ));
        }
        Ok(LayerGrads {
            params: Vec::new(),
            input: self.input_grad(&cache.input, &cache.output, upstream),
        })
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        Vec::new()
    }

    fn param_names(&self) -> &'static [&'static str] {
        &[]
    }
}
