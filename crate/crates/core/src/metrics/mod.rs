//! Binary classification metrics. The positive class is malicious (label 1).
//!
//! Every ratio with a zero denominator is reported as 0, so degenerate
//! evaluation sets produce numbers instead of errors.

mod roc;

pub use roc::{roc_and_auc, RocCurve};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Accuracy, precision, recall, F1 and false-positive rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Full report. Matrices are indexed `[true class][predicted class]` with
/// 0 = benign, 1 = malicious.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    #[serde(flatten)]
    pub scalar: ScalarMetrics,
    pub benign: ClassMetrics,
    pub malicious: ClassMetrics,
    pub macro_avg: AverageMetrics,
    pub weighted_avg: AverageMetrics,
    pub confusion_matrix: [[u64; 2]; 2],
    /// Each row divided by its support; an empty row stays 0.
    pub confusion_matrix_normalized: [[f64; 2]; 2],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn check_labels(xs: &[u8]) -> Result<()> {
    match xs.iter().find(|&&l| l > 1) {
        Some(&bad) => Err(Error::InvalidLabel(bad)),
        None => Ok(()),
    }
}

pub fn confusion(labels: &[u8], predicted: &[u8]) -> Result<ConfusionCounts> {
    if labels.len() != predicted.len() {
        return Err(Error::LengthMismatch { left: labels.len(), right: predicted.len() });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("no labels to compare".into()));
    }
    check_labels(labels)?;
    check_labels(predicted)?;
    let mut c = ConfusionCounts::default();
    for (&l, &p) in labels.iter().zip(predicted) {
        match (l, p) {
            (1, 1) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (0, _) => c.fp += 1,
            _ => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn scalar_metrics(c: &ConfusionCounts) -> ScalarMetrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    ScalarMetrics {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1: harmonic(precision, recall),
        fpr: ratio(c.fp, c.fp + c.tn),
    }
}

/// Metrics for one class treated as positive, from the shared counts.
fn class_metrics(tp: u64, fp: u64, fn_: u64) -> ClassMetrics {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    ClassMetrics { precision, recall, f1: harmonic(precision, recall), support: tp + fn_ }
}

pub fn classification_report(labels: &[u8], predicted: &[u8]) -> Result<MetricsReport> {
    let c = confusion(labels, predicted)?;
    Ok(report_from_counts(c))
}

pub fn report_from_counts(c: ConfusionCounts) -> MetricsReport {
    let malicious = class_metrics(c.tp, c.fp, c.fn_);
    // With benign as positive, benign hits are tn and its false alarms are fn.
    let benign = class_metrics(c.tn, c.fn_, c.fp);
    let macro_avg = AverageMetrics {
        precision: (benign.precision + malicious.precision) / 2.0,
        recall: (benign.recall + malicious.recall) / 2.0,
        f1: (benign.f1 + malicious.f1) / 2.0,
    };
    let n = c.total() as f64;
    let (wb, wm) = (benign.support as f64, malicious.support as f64);
    let weighted = |b: f64, m: f64| if n == 0.0 { 0.0 } else { (wb * b + wm * m) / n };
    let weighted_avg = AverageMetrics {
        precision: weighted(benign.precision, malicious.precision),
        recall: weighted(benign.recall, malicious.recall),
        f1: weighted(benign.f1, malicious.f1),
    };
    let matrix = [[c.tn, c.fp], [c.fn_, c.tp]];
    let row = |r: [u64; 2]| [ratio(r[0], r[0] + r[1]), ratio(r[1], r[0] + r[1])];
    MetricsReport {
        counts: c,
        scalar: scalar_metrics(&c),
        benign,
        malicious,
        macro_avg,
        weighted_avg,
        confusion_matrix: matrix,
        confusion_matrix_normalized: [row(matrix[0]), row(matrix[1])],
    }
}
