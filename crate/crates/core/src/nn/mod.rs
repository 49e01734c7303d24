//! Layers with hand-derived backward passes.
//!
//! Every layer implements [`Layer`]: `forward` is a pure function of the
//! parameters and the input that returns the output plus a cache, and
//! `backward` consumes that cache together with the upstream gradient.
//! The cache records a fingerprint of the parameters it was produced with;
//! handing it to a layer whose parameters have since changed is rejected with
//! [`Error::StaleCache`](crate::Error::StaleCache).

pub(crate) mod activation;
mod batchnorm;
mod conv;
mod dense;
mod init;
mod lstm;
mod pool;

use alloc::vec::Vec;

pub use activation::{Activation, ActivationCache};
pub use batchnorm::{BatchNorm1d, BatchNormCache, BN_EPSILON, BN_MOMENTUM};
pub use conv::{Conv1d, Conv1dCache, Padding};
pub(crate) use conv::conv_out_len as conv_out_len_checked;
pub use dense::{Dense, DenseCache};
pub use init::glorot_uniform;
pub use lstm::{Lstm, LstmCache, LstmOutput};
pub use pool::{AvgPool1d, AvgPoolCache};

use crate::error::Result;
use crate::real::Real;
use crate::tensor::Tensor;

/// Whether normalization layers use batch statistics or running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Gradients produced by one backward call: one tensor per trainable
/// parameter, in the order of [`Layer::params`], plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub params: Vec<Tensor<T>>,
    pub input: Tensor<T>,
}

pub trait Layer<T: Real> {
    type Cache;

    fn forward(&self, x: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, Self::Cache)>;

    fn backward(&self, cache: &Self::Cache, upstream: &Tensor<T>) -> Result<LayerGrads<T>>;

    /// Trainable parameters in canonical order.
    fn params(&self) -> Vec<&Tensor<T>>;

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>>;

    /// Names matching [`Layer::params`], e.g. `["weights", "bias"]`.
    fn param_names(&self) -> &'static [&'static str];
}
