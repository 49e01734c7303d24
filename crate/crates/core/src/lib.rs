//! Dual-head CNN-LSTM binary classifier for network-flow records.
//!
//! This crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation:
//!
//! - [`tensor`]: a dense row-major tensor and the few linear-algebra kernels
//!   the layers need.
//! - [`nn`]: Conv1D, BatchNorm1D, AvgPool1D, Dense, LSTM and activations, each
//!   with a hand-derived backward pass.
//! - [`model`]: the dual-head graph (conv/dense trunk, softmax head, LSTM stack
//!   with a sigmoid head, concatenation, final softmax), loss, prediction and
//!   the binary weights codec.
//! - [`optim`]: Adam, SGD and the epoch loop.
//! - [`data`]: label binarization, z-score normalization, splitting, batching
//!   and a synthetic flow generator.
//! - [`metrics`]: confusion counts, the classification report and ROC/AUC.
//! - [`gradcheck`]: central finite-difference checks of every backward pass.
//!
//! Everything is generic over [`Real`], implemented for `f32` (training and
//! inference) and `f64` (gradient checking).
//!
//! File formats, CSV ingestion and the command line live in the `clids` crate.
#![no_std]

extern crate alloc;

pub mod data;
pub mod error;
pub mod gradcheck;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod optim;
pub mod real;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use real::Real;
pub use tensor::Tensor;
