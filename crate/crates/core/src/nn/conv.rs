use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{glorot_uniform, Layer, LayerGrads, Mode};
use crate::error::{shape_err, Error, Result};
use crate::real::Real;
use crate::tensor::{fingerprint, Tensor};

/// Zero padding applied symmetrically to both ends of the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// No padding.
    Valid,
    /// `(kernel_width - 1) / 2` zeros on each side; preserves the length for odd
    /// kernel widths at stride 1.
    Same,
}

impl Padding {
    pub fn amount(self, kernel_width: usize) -> usize {
        match self {
            Padding::Valid => 0,
            Padding::Same => (kernel_width - 1) / 2,
        }
    }
}

/// One-dimensional convolution (cross-correlation) over `[batch, channels, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d<T> {
    /// `[out_channels, in_channels, kernel_width]`
    pub kernels: Tensor<T>,
    /// `[out_channels]`
    pub bias: Tensor<T>,
    pub stride: usize,
    pub padding: Padding,
}

#[derive(Debug, Clone)]
pub struct Conv1dCache<T> {
    input: Tensor<T>,
    out_len: usize,
    fingerprint: u64,
}

/// `floor((length + 2 * pad - kernel_width) / stride) + 1`, or `None` when no
/// full window fits.
pub(crate) fn conv_out_len(length: usize, kernel_width: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = length + 2 * pad;
    if padded < kernel_width {
        return None;
    }
    Some((padded - kernel_width) / stride + 1)
}

impl<T: Real> Conv1d<T> {
    pub fn new(kernels: Tensor<T>, bias: Tensor<T>, stride: usize, padding: Padding) -> Result<Self> {
        let (out_ch, _, _) = kernels.dims3()?;
        bias.expect_shape(&[out_ch])?;
        if stride == 0 {
            return Err(Error::InvalidConfig("conv stride must be >= 1".into()));
        }
        Ok(Self { kernels, bias, stride, padding })
    }

    pub fn init<R: Rng + ?Sized>(
        in_channels: usize,
        out_channels: usize,
        kernel_width: usize,
        padding: Padding,
        rng: &mut R,
    ) -> Self {
        let shape = [out_channels, in_channels, kernel_width];
        Self {
            kernels: glorot_uniform(&shape, in_channels * kernel_width, out_channels * kernel_width, rng),
            bias: Tensor::zeros(&[out_channels]),
            stride: 1,
            padding,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn kernel_width(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn output_len(&self, length: usize) -> Option<usize> {
        conv_out_len(length, self.kernel_width(), self.stride, self.padding.amount(self.kernel_width()))
    }

    fn fingerprint(&self) -> u64 {
        fingerprint(&[&self.kernels, &self.bias])
    }
}

impl<T: Real> Layer<T> for Conv1d<T> {
    type Cache = Conv1dCache<T>;

    fn forward(&self, x: &Tensor<T>, _mode: Mode) -> Result<(Tensor<T>, Self::Cache)> {
        let (batch, in_ch, len) = x.dims3()?;
        if in_ch != self.in_channels() {
            return Err(shape_err!("conv expects {} input channels, got {}", self.in_channels(), in_ch));
        }
        let kw = self.kernel_width();
        let out_len = self.output_len(len).ok_or_else(|| {
            Error::DegenerateInput(format!("length {len} is shorter than kernel width {kw}"))
        })?;
        let out_ch = self.out_channels();
        let pad = self.padding.amount(kw) as isize;
        let stride = self.stride;
        let w = self.kernels.data();
        let xd = x.data();

        let mut out = vec![T::ZERO; batch * out_ch * out_len];
        for b in 0..batch {
            for o in 0..out_ch {
                let orow = &mut out[(b * out_ch + o) * out_len..][..out_len];
                orow.iter_mut().for_each(|v| *v = self.bias.data()[o]);
                for c in 0..in_ch {
                    let xrow = &xd[(b * in_ch + c) * len..][..len];
                    let wrow = &w[(o * in_ch + c) * kw..][..kw];
                    for (t, acc) in orow.iter_mut().enumerate() {
                        let start = (t * stride) as isize - pad;
                        for (k, &wv) in wrow.iter().enumerate() {
                            let pos = start + k as isize;
                            if pos >= 0 && (pos as usize) < len {
                                *acc += wv * xrow[pos as usize];
                            }
                        }
                    }
                }
            }
        }
        let y = Tensor::new(&[batch, out_ch, out_len], out)?;
        Ok((y, Conv1dCache { input: x.clone(), out_len, fingerprint: self.fingerprint() }))
    }

    fn backward(&self, cache: &Self::Cache, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
        if cache.fingerprint != self.fingerprint() {
            return Err(Error::StaleCache);
        }
        let (batch, in_ch, len) = cache.input.dims3()?;
        let out_ch = self.out_channels();
        let out_len = cache.out_len;
        upstream.expect_shape(&[batch, out_ch, out_len])?;
        let kw = self.kernel_width();
        let pad = self.padding.amount(kw) as isize;
        let stride = self.stride;
        let w = self.kernels.data();
        let xd = cache.input.data();
        let gd = upstream.data();

        let mut dw = vec![T::ZERO; self.kernels.len()];
        let mut db = vec![T::ZERO; out_ch];
        let mut dx = vec![T::ZERO; cache.input.len()];
        for b in 0..batch {
            for o in 0..out_ch {
                let grow = &gd[(b * out_ch + o) * out_len..][..out_len];
                db[o] += grow.iter().fold(T::ZERO, |acc, &g| acc + g);
                for c in 0..in_ch {
                    let xrow = &xd[(b * in_ch + c) * len..][..len];
                    let dxrow = &mut dx[(b * in_ch + c) * len..][..len];
                    let wrow = &w[(o * in_ch + c) * kw..][..kw];
                    let dwrow = &mut dw[(o * in_ch + c) * kw..][..kw];
                    for (t, &g) in grow.iter().enumerate() {
                        let start = (t * stride) as isize - pad;
                        for k in 0..kw {
                            let pos = start + k as isize;
                            if pos >= 0 && (pos as usize) < len {
                                let p = pos as usize;
                                dwrow[k] += g * xrow[p];
                                dxrow[p] += g * wrow[k];
                            }
                        }
                    }
                }
            }
        }
        Ok(LayerGrads {
            params: vec![
                Tensor::new(self.kernels.shape(), dw)?,
                Tensor::new(&[out_ch], db)?,
            ],
            input: Tensor::new(cache.input.shape(), dx)?,
        })
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.kernels, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.kernels, &mut self.bias]
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["kernel", "bias"]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(kernel: &[f64], padding: Padding) -> Conv1d<f64> {
        let k = Tensor::new(&[1, 1, kernel.len()], kernel.to_vec()).unwrap();
        Conv1d::new(k, Tensor::zeros(&[1]), 1, padding).unwrap()
    }

    fn seq(v: &[f64]) -> Tensor<f64> {
        Tensor::new(&[1, 1, v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn identity_kernel() {
        let (y, _) = single(&[1.0], Padding::Valid).forward(&seq(&[5.0, 7.0, 9.0]), Mode::Infer).unwrap();
        assert_eq!(y.data(), &[5.0, 7.0, 9.0]);
    }

    #[test]
    fn difference_kernel() {
        let conv = single(&[1.0, 0.0, -1.0], Padding::Valid);
        let (y, _) = conv.forward(&seq(&[1.0, 2.0, 3.0, 4.0]), Mode::Infer).unwrap();
        assert_eq!(y.data(), &[-2.0, -2.0]);
    }

    #[test]
    fn too_short_input_is_degenerate() {
        let err = single(&[1.0, 1.0, 1.0], Padding::Valid)
            .forward(&seq(&[1.0, 2.0]), Mode::Infer)
            .unwrap_err();
        assert_eq!(err.name(), "DegenerateInput");
    }

    #[test]
    fn same_padding_keeps_length() {
        let conv = single(&[1.0, 1.0, 1.0], Padding::Same);
        let (y, _) = conv.forward(&seq(&[1.0, 2.0, 3.0, 4.0]), Mode::Infer).unwrap();
        assert_eq!(y.data(), &[3.0, 6.0, 9.0, 7.0]);
    }

    #[test]
    fn channel_mismatch() {
        let err = single(&[1.0], Padding::Valid)
            .forward(&Tensor::zeros(&[1, 2, 3]), Mode::Infer)
            .unwrap_err();
        assert_eq!(err.name(), "ShapeMismatch");
    }

    proptest! {
        #[test]
        fn output_length_formula(
            len in 1usize..40, kw in 1usize..8, stride in 1usize..5, same in any::<bool>(),
        ) {
            let padding = if same { Padding::Same } else { Padding::Valid };
            let pad = padding.amount(kw);
            let k = Tensor::<f64>::full(&[2, 1, kw], 1.0);
            let conv = Conv1d::new(k, Tensor::zeros(&[2]), stride, padding).unwrap();
            let x = Tensor::full(&[1, 1, len], 1.0);
            match conv.forward(&x, Mode::Infer) {
                Ok((y, _)) => {
                    prop_assert!(len + 2 * pad >= kw);
                    prop_assert_eq!(y.shape(), &[1, 2, (len + 2 * pad - kw) / stride + 1][..]);
                }
                Err(e) => {
                    prop_assert!(len + 2 * pad < kw);
                    prop_assert_eq!(e.name(), "DegenerateInput");
                }
            }
        }
    }
}
