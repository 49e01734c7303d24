//! Adam, a plain SGD baseline and the epoch loop.
//!
//! Each epoch shuffles with its own stream derived from `(seed, epoch)`, steps
//! Adam once per mini-batch and folds the batch-norm batch statistics into the
//! running statistics after every batch. There is no early stopping: the
//! model left behind is the last-epoch model.

mod adam;
mod sgd;
mod train;

pub use adam::AdamState;
pub use sgd::Sgd;
pub use train::{evaluate, train, EpochRecord, TrainConfig, TrainReport, Trainer};
