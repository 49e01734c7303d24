//! Flow datasets: label binarization, z-score normalization, splitting,
//! batching and a synthetic generator.
//!
//! CSV parsing lives in the `clids` crate; this module starts from parsed
//! [`FlowRecord`]s.
//!
//! Every dataset knows which partition it is (a whole source, or the train or
//! validation side of one particular split). Normalization statistics remember
//! the partition they were fit on, so fitting on validation rows or applying
//! train statistics to the rows of a different split fails with
//! [`Error::Leakage`].

mod batch;
mod normalize;
mod split;
mod synth;

pub use batch::{batches, Batches};
pub use normalize::{NormStats, CONSTANT_STD};
pub use split::{split, split_indices, SplitSpec};
pub use synth::{synth_generate, Difficulty, INFORMATIVE, SYNTH_FEATURES};

pub(crate) use batch::{batch_ranges, gather};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const DEFAULT_BENIGN_LABEL: &str = "BenignTraffic";

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub features: Vec<f64>,
    pub raw_label: String,
}

/// How `raw_label` is compared with the benign label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMatch {
    #[default]
    Exact,
    Prefix,
}

/// Which rows a dataset holds. Split ids tie the two sides of one split
/// together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Whole(u64),
    Train(u64),
    Validation(u64),
}

impl Partition {
    pub fn id(self) -> u64 {
        match self {
            Partition::Whole(id) | Partition::Train(id) | Partition::Validation(id) => id,
        }
    }
}

/// Feature matrix `[rows, features]` with binary labels (0 benign, 1 malicious).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<u8>,
    norm: Option<NormStats>,
    partition: Partition,
    pub provenance: String,
}

impl FlowDataset {
    /// Builds an unnormalized dataset from a row-major feature matrix.
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<u8>, provenance: impl Into<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("dataset has no rows".into()));
        }
        if n_features == 0 {
            return Err(Error::EmptyInput("dataset has no feature columns".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::LengthMismatch { left: features.len(), right: labels.len() * n_features });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidLabel(bad));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput(format!("non-finite feature at row {}", i / n_features)));
        }
        let id = content_id(&features, &labels);
        Ok(Self { features, n_features, labels, norm: None, partition: Partition::Whole(id), provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..][..self.n_features]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Statistics this dataset was normalized with, if any.
    pub fn norm_stats(&self) -> Option<&NormStats> {
        self.norm.as_ref()
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    /// `(benign, malicious)` row counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let malicious = self.labels.iter().filter(|&&l| l == 1).count();
        (self.len() - malicious, malicious)
    }

    fn subset(&self, rows: &[usize], partition: Partition) -> Self {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        Self {
            features,
            n_features: self.n_features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            norm: self.norm.clone(),
            partition,
            provenance: self.provenance.clone(),
        }
    }
}

/// Maps raw labels to 0 (benign) / 1 (malicious).
pub fn binarize(records: &[FlowRecord], benign_label: &str, mode: LabelMatch) -> Result<FlowDataset> {
    let first = records.first().ok_or_else(|| Error::EmptyInput("no records to binarize".into()))?;
    let n_features = first.features.len();
    let mut features = Vec::with_capacity(records.len() * n_features);
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        if r.features.len() != n_features {
            return Err(Error::FeatureCountMismatch { expected: n_features, found: r.features.len() });
        }
        features.extend_from_slice(&r.features);
        let benign = match mode {
            LabelMatch::Exact => r.raw_label == benign_label,
            LabelMatch::Prefix => r.raw_label.starts_with(benign_label),
        };
        labels.push(if benign { 0 } else { 1 });
    }
    FlowDataset::new(features, n_features, labels, "records")
}

/// FNV-1a over feature bits and labels.
fn content_id(features: &[f64], labels: &[u8]) -> u64 {
    let mut h = Fnv::new();
    for v in features {
        h.write(&v.to_bits().to_le_bytes());
    }
    h.write(labels);
    h.finish()
}

pub(crate) struct Fnv(u64);

impl Fnv {
    pub(crate) fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}
