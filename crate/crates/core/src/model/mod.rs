//! The dual-head CNN-LSTM graph.
//!
//! ```text
//! x [B, F] -> [B, 1, F]
//!   -> (Conv1D -> BatchNorm -> ReLU -> AvgPool) x blocks -> flatten
//!   -> (Dense -> ReLU) x trunk, last width 16            = trunk [B, 16]
//!
//! head A: trunk -> Dense(2) -> softmax                       [B, 2]
//! head B: trunk -> [B, 16, 1] -> LSTM (sequence) -> ... -> LSTM (last)
//!               -> Dense(2) -> sigmoid                       [B, 2]
//! output: [head A | head B] -> Dense(2) -> softmax           [B, 2]
//! ```
//!
//! Column 0 of every two-wide output is "benign", column 1 "malicious".

mod config;
mod graph;
mod predict;
pub mod weights;

pub use config::{ConvBlock, ModelConfig, CLASSES, RESHAPE_STEPS};
pub use graph::{Architecture, ForwardCache, ForwardOutput, Gradients, ModelGraph};
pub use predict::{cross_entropy, Label, Prediction};
