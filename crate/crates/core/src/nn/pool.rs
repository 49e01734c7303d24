use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Layer, LayerGrads, Mode};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Average pooling over non-overlapping windows (stride = window). A trailing
/// remainder shorter than the window is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AvgPool1d {
    pub window: usize,
}

#[derive(Debug, Clone)]
pub struct AvgPoolCache {
    input_shape: [usize; 3],
}

impl AvgPool1d {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidConfig("pool window must be >= 1".into()));
        }
        Ok(Self { window })
    }

    pub fn output_len(&self, length: usize) -> usize {
        length / self.window
    }
}

impl<T: Real> Layer<T> for AvgPool1d {
    type Cache = AvgPoolCache;

    fn forward(&self, x: &Tensor<T>, _mode: Mode) -> Result<(Tensor<T>, Self::Cache)> {
        let (batch, ch, len) = x.dims3()?;
        if len < self.window {
            return Err(Error::DegenerateInput(format!(
                "length {len} is shorter than pool window {}",
                self.window
            )));
        }
        let out_len = self.output_len(len);
        let n = T::from_f64(self.window as f64);
        let mut out = Vec::with_capacity(batch * ch * out_len);
        for row in x.data().chunks_exact(len) {
            for w in row.chunks_exact(self.window) {
                // Offsets from the first element keep constant windows exact.
                let first = w[0];
                let spread = w[1..].iter().fold(T::ZERO, |acc, &v| acc + (v - first));
                out.push(first + spread / n);
            }
        }
        let y = Tensor::new(&[batch, ch, out_len], out)?;
        Ok((y, AvgPoolCache { input_shape: [batch, ch, len] }))
    }

    fn backward(&self, cache: &Self::Cache, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
        let [batch, ch, len] = cache.input_shape;
        let out_len = self.output_len(len);
        upstream.expect_shape(&[batch, ch, out_len])?;
        let scale = T::ONE / T::from_f64(self.window as f64);
        let mut dx = vec![T::ZERO; batch * ch * len];
        for (dxrow, grow) in dx.chunks_exact_mut(len).zip(upstream.data().chunks_exact(out_len)) {
            for (w, &g) in dxrow.chunks_exact_mut(self.window).zip(grow) {
                w.iter_mut().for_each(|v| *v = g * scale);
            }
        }
        Ok(LayerGrads { params: Vec::new(), input: Tensor::new(&cache.input_shape, dx)? })
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
