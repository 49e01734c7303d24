//! Run-directory files.
//!
//! ```text
//! weights.bin        model tensors (binary, see clids_core::model::weights)
//! norm.json          feature names and per-feature mean/std
//! train_report.json  config echo, data summary, per-epoch metrics
//! metrics.json       classification report of the last evaluation
//! roc.csv            fpr,tpr points of the last evaluation
//! ```
//!
//! JSON is written with `serde_json`'s pretty printer and a trailing newline;
//! floats use the shortest round-trip representation, so identical runs give
//! identical bytes.

use std::fs;
use std::path::Path;

use clids_core::data::{NormStats, SplitSpec};
use clids_core::metrics::{MetricsReport, RocCurve};
use clids_core::model::ModelConfig;
use clids_core::optim::{EpochRecord, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const WEIGHTS_FILE: &str = "weights.bin";
pub const NORM_FILE: &str = "norm.json";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const ROC_FILE: &str = "roc.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormEntry {
    pub feature_index: usize,
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormFile {
    /// Id of the training partition the statistics were fit on.
    pub fit_id: u64,
    pub features: Vec<NormEntry>,
}

impl NormFile {
    pub fn new(stats: &NormStats, names: &[String]) -> Self {
        let features = stats
            .mean()
            .iter()
            .zip(stats.std())
            .enumerate()
            .map(|(i, (&mean, &std))| NormEntry { feature_index: i, name: names[i].clone(), mean, std })
            .collect();
        Self { fit_id: stats.fit_id(), features }
    }

    pub fn stats(&self) -> Result<NormStats, CliError> {
        for (i, e) in self.features.iter().enumerate() {
            if e.feature_index != i {
                return Err(CliError::Json(format!("{NORM_FILE}: entry {i} has feature_index {}", e.feature_index)));
            }
        }
        let mean = self.features.iter().map(|e| e.mean).collect();
        let std = self.features.iter().map(|e| e.std).collect();
        Ok(NormStats::from_parts(self.fit_id, mean, std)?)
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|e| e.name.clone()).collect()
    }
}

/// Where the training rows came from and how they were labelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSummary {
    /// CSV path as given, or `synthetic:<difficulty>:<rows>`.
    pub source: String,
    pub label_column: String,
    pub benign_label: String,
    pub label_prefix: bool,
    pub rows_loaded: usize,
    pub dropped_rows: usize,
    pub train_rows: usize,
    pub val_rows: usize,
    /// `[benign, malicious]`.
    pub train_class_counts: [usize; 2],
    pub val_class_counts: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainReportFile {
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub data: DataSummary,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    /// What was evaluated, e.g. `validation split` or a CSV path.
    pub source: String,
    pub rows: usize,
    pub dropped_rows: usize,
    /// Mean cross-entropy of the final softmax.
    pub loss: f64,
    /// `None` when the labels hold a single class.
    pub auc: Option<f64>,
    #[serde(flatten)]
    pub report: MetricsReport,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json(format!("{}: {e}", path.display())))
}

pub fn write_roc(path: &Path, roc: Option<&RocCurve>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fpr", "tpr"])?;
    if let Some(roc) = roc {
        for &(fpr, tpr) in &roc.points {
            w.write_record([fpr.to_string(), tpr.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_file_roundtrip() {
        let stats = NormStats::from_parts(77, vec![1.0, -2.5], vec![0.5, 3.0]).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let file = NormFile::new(&stats, &names);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"feature_index\":1"));
        let back: NormFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.stats().unwrap(), stats);
        assert_eq!(back.names(), names);
    }

    #[test]
    fn norm_file_index_must_be_dense() {
        let mut file = NormFile::new(&NormStats::from_parts(0, vec![0.0], vec![1.0]).unwrap(), &["x".into()]);
        file.features[0].feature_index = 3;
        assert_eq!(file.stats().unwrap_err().name(), "Json");
    }
}
