use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use crate::data::{batch_ranges, gather, FlowDataset};
use crate::error::{Error, Result};
use crate::model::{Label, ModelGraph};
use crate::nn::Mode;
use crate::real::Real;
use crate::rng;
use crate::tensor::Tensor;

/// Everything that controls a training run. Echoed into the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seeds the per-epoch shuffle streams.
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 25, batch_size: 256, lr: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, seed: 0, shuffle: true }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        // Train-mode batch norm needs two rows per batch.
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig("batch_size must be at least 2".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Metrics after one epoch. Train figures are averaged over the epoch's
/// train-mode batches; validation figures come from an infer-mode pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
}

/// Adam state plus epoch counter, for callers that drive training one epoch
/// at a time.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    config: TrainConfig,
    adam: AdamState<T>,
    epoch: usize,
}

fn correct<T: Real>(probs: &Tensor<T>, labels: &[u8]) -> usize {
    probs
        .data()
        .chunks_exact(2)
        .zip(labels)
        .filter(|(p, &l)| Label::from_probabilities(p[0].to_f64(), p[1].to_f64()).index() == l)
        .count()
}

fn check_width<T: Real>(model: &ModelGraph<T>, ds: &FlowDataset) -> Result<()> {
    if ds.n_features() != model.input_features() {
        return Err(Error::FeatureCountMismatch { expected: model.input_features(), found: ds.n_features() });
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Infer-mode mean loss and accuracy over a dataset.
pub fn evaluate<T: Real>(model: &ModelGraph<T>, ds: &FlowDataset, batch_size: usize) -> Result<(f64, f64)> {
    check_width(model, ds)?;
    let order: Vec<usize> = (0..ds.len()).collect();
    let mut loss = 0.0;
    let mut hits = 0;
    for r in batch_ranges(ds.len(), batch_size.max(1), false) {
        let (x, y) = gather::<T>(ds, &order[r.clone()]);
        let out = model.forward(&x, Mode::Infer)?;
        loss += model.loss(&out.cache, &y)?.to_f64() * r.len() as f64;
        hits += correct(&out.probabilities, &ds.labels()[r]);
    }
    let n = ds.len() as f64;
    Ok((loss / n, hits as f64 / n))
}

impl<T: Real> Trainer<T> {
    pub fn new(model: &ModelGraph<T>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let adam = AdamState::new(&model.params(), config.lr, config.beta1, config.beta2, config.epsilon)?;
        Ok(Self { config, adam, epoch: 0 })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Epochs completed so far.
    pub fn epochs_run(&self) -> usize {
        self.epoch
    }

    /// One pass over `train` in shuffled mini-batches, then an optional
    /// validation pass.
    pub fn run_epoch(
        &mut self,
        model: &mut ModelGraph<T>,
        train: &FlowDataset,
        val: Option<&FlowDataset>,
    ) -> Result<EpochRecord> {
        check_width(model, train)?;
        if let Some(v) = val {
            check_width(model, v)?;
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        if self.config.shuffle {
            order.shuffle(&mut rng::stream(self.config.seed, self.epoch as u64));
        }

        let mut loss_sum = 0.0;
        let mut hits = 0;
        for r in batch_ranges(train.len(), self.config.batch_size, true) {
            let rows = &order[r.clone()];
            let (x, y) = gather::<T>(train, rows);
            let out = model.forward(&x, Mode::Train)?;
            let loss = model.loss(&out.cache, &y)?;
            let grads = model.backward(&out.cache, &y)?;
            loss_sum += loss.to_f64() * r.len() as f64;
            let labels: Vec<u8> = rows.iter().map(|&i| train.labels()[i]).collect();
            hits += correct(&out.probabilities, &labels);
            model.commit_batch_stats(&out.cache);
            self.adam.step(&mut model.params_mut(), &grads.tensors)?;
        }
        self.epoch += 1;

        let n = train.len() as f64;
        let (val_loss, val_accuracy) = match val {
            Some(v) => {
                let (l, a) = evaluate(model, v, self.config.batch_size)?;
                (Some(l), Some(a))
            }
            None => (None, None),
        };
        Ok(EpochRecord { epoch: self.epoch, train_loss: loss_sum / n, train_accuracy: hits as f64 / n, val_loss, val_accuracy })
    }
}

/// Runs `config.epochs` epochs of mini-batch Adam. The model left in place is
/// the last-epoch model.
pub fn train<T: Real>(
    model: &mut ModelGraph<T>,
    train: &FlowDataset,
    val: Option<&FlowDataset>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    let mut trainer = Trainer::new(model, config.clone())?;
    let mut epochs = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        epochs.push(trainer.run_epoch(model, train, val)?);
    }
    Ok(TrainReport { config: config.clone(), epochs })
}
