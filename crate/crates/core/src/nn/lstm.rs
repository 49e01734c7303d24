use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{glorot_uniform, Layer, LayerGrads, Mode};
use crate::error::{shape_err, Error, Result};
use crate::real::Real;
use crate::tensor::{fingerprint, gemm_nn, gemm_nt, gemm_tn, Tensor};

/// What an [`Lstm`] layer returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LstmOutput {
    /// Every hidden state, `[batch, steps, hidden]`.
    Sequence,
    /// Final hidden state only, `[batch, hidden]`.
    Last,
}

/// Single-direction LSTM over `[batch, steps, input_dim]`, starting from zero
/// hidden and cell states.
///
/// The `4 * hidden` columns of both kernels and the bias are four gate blocks
/// in the order input, forget, cell candidate, output:
///
/// ```text
/// z = x_t * input_kernel + h * recurrent_kernel + bias
/// i = sigmoid(z[0..H])   f = sigmoid(z[H..2H])
/// g = tanh(z[2H..3H])    o = sigmoid(z[3H..4H])
/// c = f * c + i * g
/// h = o * tanh(c)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm<T> {
    /// `[input_dim, 4 * hidden]`
    pub input_kernel: Tensor<T>,
    /// `[hidden, 4 * hidden]`
    pub recurrent_kernel: Tensor<T>,
    /// `[4 * hidden]`
    pub bias: Tensor<T>,
    pub hidden: usize,
    pub output: LstmOutput,
}

#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    input: Tensor<T>,
    steps: Vec<StepCache<T>>,
    fingerprint: u64,
}

#[derive(Debug, Clone)]
struct StepCache<T> {
    x: Vec<T>,
    h_prev: Vec<T>,
    c_prev: Vec<T>,
    /// Activated gates `[batch, 4 * hidden]`.
    gates: Vec<T>,
    tanh_c: Vec<T>,
}

impl<T: Real> Lstm<T> {
    pub fn new(
        input_kernel: Tensor<T>,
        recurrent_kernel: Tensor<T>,
        bias: Tensor<T>,
        output: LstmOutput,
    ) -> Result<Self> {
        let (hidden, four_h) = recurrent_kernel.dims2()?;
        if four_h != 4 * hidden {
            return Err(shape_err!("recurrent kernel must be [H, 4H], got {:?}", recurrent_kernel.shape()));
        }
        let (_, cols) = input_kernel.dims2()?;
        if cols != four_h {
            return Err(shape_err!("input kernel must have {} columns, got {}", four_h, cols));
        }
        bias.expect_shape(&[four_h])?;
        Ok(Self { input_kernel, recurrent_kernel, bias, hidden, output })
    }

    /// Glorot-uniform kernels, zero bias except 1.0 on the forget gate.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, output: LstmOutput, rng: &mut R) -> Self {
        let four_h = 4 * hidden;
        let input_kernel = glorot_uniform(&[input_dim, four_h], input_dim, four_h, rng);
        let recurrent_kernel = glorot_uniform(&[hidden, four_h], hidden, four_h, rng);
        let bias = Tensor::from_fn(&[four_h], |k| if (hidden..2 * hidden).contains(&k) { T::ONE } else { T::ZERO });
        Self { input_kernel, recurrent_kernel, bias, hidden, output }
    }

    pub fn input_dim(&self) -> usize {
        self.input_kernel.shape()[0]
    }

    fn fingerprint(&self) -> u64 {
        fingerprint(&[&self.input_kernel, &self.recurrent_kernel, &self.bias])
    }
}

impl<T: Real> Layer<T> for Lstm<T> {
    type Cache = LstmCache<T>;

    fn forward(&self, x: &Tensor<T>, _mode: Mode) -> Result<(Tensor<T>, Self::Cache)> {
        let (batch, steps, dim) = x.dims3()?;
        if dim != self.input_dim() {
            return Err(shape_err!("lstm expects input dim {}, got {}", self.input_dim(), dim));
        }
        if steps == 0 {
            return Err(shape_err!("lstm needs at least one step"));
        }
        let h = self.hidden;
        let four_h = 4 * h;

        let mut h_state = vec![T::ZERO; batch * h];
        let mut c_state = vec![T::ZERO; batch * h];
        let mut seq_out = match self.output {
            LstmOutput::Sequence => vec![T::ZERO; batch * steps * h],
            LstmOutput::Last => Vec::new(),
        };
        let mut cache_steps = Vec::with_capacity(steps);

        for t in 0..steps {
            let mut xt = Vec::with_capacity(batch * dim);
            for b in 0..batch {
                xt.extend_from_slice(&x.data()[(b * steps + t) * dim..][..dim]);
            }
            let mut z = Vec::with_capacity(batch * four_h);
            for _ in 0..batch {
                z.extend_from_slice(self.bias.data());
            }
            gemm_nn(&xt, self.input_kernel.data(), &mut z, batch, dim, four_h);
            gemm_nn(&h_state, self.recurrent_kernel.data(), &mut z, batch, h, four_h);

            for row in z.chunks_exact_mut(four_h) {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = if (2 * h..3 * h).contains(&k) { v.tanh() } else { v.sigmoid() };
                }
            }
            let gates = z;

            let h_prev = core::mem::replace(&mut h_state, vec![T::ZERO; batch * h]);
            let c_prev = core::mem::replace(&mut c_state, vec![T::ZERO; batch * h]);
            let mut tanh_c = vec![T::ZERO; batch * h];
            for b in 0..batch {
                let gr = &gates[b * four_h..][..four_h];
                for j in 0..h {
                    let idx = b * h + j;
                    let c = gr[h + j] * c_prev[idx] + gr[j] * gr[2 * h + j];
                    let tc = c.tanh();
                    c_state[idx] = c;
                    tanh_c[idx] = tc;
                    h_state[idx] = gr[3 * h + j] * tc;
                }
            }
            if self.output == LstmOutput::Sequence {
                for b in 0..batch {
                    seq_out[(b * steps + t) * h..][..h].copy_from_slice(&h_state[b * h..][..h]);
                }
            }
            cache_steps.push(StepCache { x: xt, h_prev, c_prev, gates, tanh_c });
        }

        let y = match self.output {
            LstmOutput::Sequence => Tensor::new(&[batch, steps, h], seq_out)?,
            LstmOutput::Last => Tensor::new(&[batch, h], h_state)?,
        };
        let cache = LstmCache { input: x.clone(), steps: cache_steps, fingerprint: self.fingerprint() };
        Ok((y, cache))
    }

    fn backward(&self, cache: &Self::Cache, upstream: &Tensor<T>) -> Result<LayerGrads<T>> {
        if cache.fingerprint != self.fingerprint() {
            return Err(Error::StaleCache);
        }
        let (batch, steps, dim) = cache.input.dims3()?;
        let h = self.hidden;
        let four_h = 4 * h;
        match self.output {
            LstmOutput::Sequence => upstream.expect_shape(&[batch, steps, h])?,
            LstmOutput::Last => upstream.expect_shape(&[batch, h])?,
        }

        let mut d_in = vec![T::ZERO; dim * four_h];
        let mut d_rec = vec![T::ZERO; h * four_h];
        let mut d_bias = vec![T::ZERO; four_h];
        let mut dx = vec![T::ZERO; batch * steps * dim];
        let mut dh_next = vec![T::ZERO; batch * h];
        let mut dc_next = vec![T::ZERO; batch * h];
        let mut dz = vec![T::ZERO; batch * four_h];

        for t in (0..steps).rev() {
            let sc = &cache.steps[t];
            let mut dh = dh_next;
            match self.output {
                LstmOutput::Sequence => {
                    for b in 0..batch {
                        for (d, &u) in dh[b * h..][..h].iter_mut().zip(&upstream.data()[(b * steps + t) * h..][..h]) {
                            *d += u;
                        }
                    }
                }
                LstmOutput::Last if t == steps - 1 => {
                    for (d, &u) in dh.iter_mut().zip(upstream.data()) {
                        *d += u;
                    }
                }
                LstmOutput::Last => {}
            }

            for b in 0..batch {
                let gr = &sc.gates[b * four_h..][..four_h];
                let dzr = &mut dz[b * four_h..][..four_h];
                for j in 0..h {
                    let idx = b * h + j;
                    let (i, f, g, o) = (gr[j], gr[h + j], gr[2 * h + j], gr[3 * h + j]);
                    let tc = sc.tanh_c[idx];
                    let dc = dh[idx] * o * (T::ONE - tc * tc) + dc_next[idx];
                    let d_o = dh[idx] * tc;
                    let d_i = dc * g;
                    let d_g = dc * i;
                    let d_f = dc * sc.c_prev[idx];
                    dc_next[idx] = dc * f;
                    dzr[j] = d_i * i * (T::ONE - i);
                    dzr[h + j] = d_f * f * (T::ONE - f);
                    dzr[2 * h + j] = d_g * (T::ONE - g * g);
                    dzr[3 * h + j] = d_o * o * (T::ONE - o);
                }
            }

            gemm_tn(&sc.x, &dz, &mut d_in, dim, batch, four_h);
            gemm_tn(&sc.h_prev, &dz, &mut d_rec, h, batch, four_h);
            for row in dz.chunks_exact(four_h) {
                for (d, &v) in d_bias.iter_mut().zip(row) {
                    *d += v;
                }
            }
            let mut dxt = vec![T::ZERO; batch * dim];
            gemm_nt(&dz, self.input_kernel.data(), &mut dxt, batch, four_h, dim);
            for b in 0..batch {
                dx[(b * steps + t) * dim..][..dim].copy_from_slice(&dxt[b * dim..][..dim]);
            }
            dh = vec![T::ZERO; batch * h];
            gemm_nt(&dz, self.recurrent_kernel.data(), &mut dh, batch, four_h, h);
            dh_next = dh;
        }

        Ok(LayerGrads {
            params: vec![
                Tensor::new(&[dim, four_h], d_in)?,
                Tensor::new(&[h, four_h], d_rec)?,
                Tensor::new(&[four_h], d_bias)?,
            ],
            input: Tensor::new(&[batch, steps, dim], dx)?,
        })
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.input_kernel, &self.recurrent_kernel, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.input_kernel, &mut self.recurrent_kernel, &mut self.bias]
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["input_kernel", "recurrent_kernel", "bias"]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_stay_at_zero() {
        let l = Lstm::<f64>::new(
            Tensor::zeros(&[3, 8]),
            Tensor::zeros(&[2, 8]),
            Tensor::zeros(&[8]),
            LstmOutput::Sequence,
        )
        .unwrap();
        let x = Tensor::from_fn(&[2, 5, 3], |i| i as f64 - 7.0);
        let (y, _) = l.forward(&x, Mode::Infer).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_hand_evaluation() {
        let l = Lstm::<f64>::new(
            Tensor::new(&[1, 4], vec![0.0, 0.0, 1.0, 0.0]).unwrap(),
            Tensor::zeros(&[1, 4]),
            Tensor::zeros(&[4]),
            LstmOutput::Last,
        )
        .unwrap();
        let (y, _) = l.forward(&Tensor::new(&[1, 1, 1], vec![1.0]).unwrap(), Mode::Infer).unwrap();
        let c = 0.5 * libm::tanh(1.0);
        let h = 0.5 * libm::tanh(c);
        assert!((c - 0.380797).abs() < 1e-6);
        assert!((h - 0.181700).abs() < 1e-6);
        assert!((y.data()[0] - h).abs() < 1e-15);
    }

    #[test]
    fn zero_steps_rejected() {
        let mut rng = crate::rng::seeded(0);
        let l = Lstm::<f64>::init(1, 2, LstmOutput::Last, &mut rng);
        let x = Tensor::<f64>::new(&[1, 0, 1], vec![]);
        // A zero-length dimension cannot even be constructed.
        assert_eq!(x.unwrap_err().name(), "ShapeMismatch");
        let err = l.forward(&Tensor::zeros(&[1, 3, 2]), Mode::Infer).unwrap_err();
        assert_eq!(err.name(), "ShapeMismatch");
    }

    #[test]
    fn last_equals_final_step_of_sequence() {
        let mut rng = crate::rng::seeded(5);
        let seq = Lstm::<f32>::init(3, 4, LstmOutput::Sequence, &mut rng);
        let last = Lstm { output: LstmOutput::Last, ..seq.clone() };
        let x = Tensor::from_fn(&[2, 6, 3], |i| (i as f32 * 0.37) % 1.3 - 0.6);
        let (ys, _) = seq.forward(&x, Mode::Infer).unwrap();
        let (yl, _) = last.forward(&x, Mode::Infer).unwrap();
        for b in 0..2 {
            assert_eq!(&ys.data()[(b * 6 + 5) * 4..][..4], &yl.data()[b * 4..][..4]);
        }
    }

    #[test]
    fn forget_gate_bias_initialized_to_one() {
        let mut rng = crate::rng::seeded(0);
        let l = Lstm::<f32>::init(1, 64, LstmOutput::Sequence, &mut rng);
        assert_eq!(l.input_kernel.shape(), &[1, 256]);
        assert_eq!(l.recurrent_kernel.shape(), &[64, 256]);
        for (k, &b) in l.bias.data().iter().enumerate() {
            assert_eq!(b, if (64..128).contains(&k) { 1.0 } else { 0.0 });
        }
    }
}
