use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{glorot_uniform, Layer, LayerGrads, Mode};
use crate::error::{shape_err, Error, Result};
use crate::real::Real;
use crate::tensor::{fingerprint, gemm_nt, gemm_tn, Tensor};

/// Affine map `x * weights + bias` over `[batch, in]` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `[in, out]`
    pub weights: Tensor<T>,
    /// `[out]`
    pub bias: Tensor<T>,
}

#[derive(Debug, Clone)]
pub struct DenseCache<T> {
    input: Tensor<T>,
    fingerprint: u64,
}

impl<T: Real> Dense<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let (_, out) = weights.dims2()?;
        bias.expect_shape(&[out])?;
        Ok(Self { weights, bias })
    }

    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self {
            weights: glorot_uniform(&[inputs, outputs], inputs, outputs, rng),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[1]
    }

    fn fingerprint(&self) -> u64 {
        fingerprint(&[&self.weights, &self.bias])
    }
}

impl<T: Real> Layer<T> for Dense<T> {
    type Cache = DenseCache<T>;

    fn forward(&self, x: &Tensor<T>, _mode: Mode) -> Result<(Tensor<T>, Self::Cache)> {
        let (_, inputs) = x.dims2()?;
        if inputs != self.inputs() {
            return Err(shape_err!("dense expects {} inputs, got {}", self.inputs(), inputs));
        }
        let y = x.matmul(&self.weights)?.add_row_vector(&self.bias)?;
        Ok((y, DenseCache { input: x.clone(), fingerprint: self.fingerprint() }))
    }

    fn backward(&self, cache: &Self::Cache, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
        if cache.fingerprint != self.fingerprint() {
            return Err(Error::StaleCache);
        }
        let (batch, inputs) = cache.input.dims2()?;
        let outputs = self.outputs();
        upstream.expect_shape(&[batch, outputs])?;

        let mut dw = vec![T::ZERO; inputs * outputs];
        gemm_tn(cache.input.data(), upstream.data(), &mut dw, inputs, batch, outputs);
        let mut db = vec![T::ZERO; outputs];
        for row in upstream.data().chunks_exact(outputs) {
            for (d, &g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let mut dx = vec![T::ZERO; batch * inputs];
        gemm_nt(upstream.data(), self.weights.data(), &mut dx, batch, outputs, inputs);

        Ok(LayerGrads {
            params: vec![Tensor::new(&[inputs, outputs], dw)?, Tensor::new(&[outputs], db)?],
            input: Tensor::new(&[batch, inputs], dx)?,
        })
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.weights, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weights, &mut self.bias]
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["weights", "bias"]
    }
}
