//! CSV ingestion. The header decides which column holds the label; every
//! other column is a numeric feature. Rows that do not parse, or that hold a
//! non-finite value, are dropped and counted.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use clids_core::data::FlowRecord;

use crate::error::CliError;

/// Parsed file plus what was thrown away.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    /// Feature column names in file order (label column excluded).
    pub feature_names: Vec<String>,
    pub records: Vec<FlowRecord>,
    pub dropped_rows: usize,
    /// Whether a label column was found. When it was not, `raw_label` is empty.
    pub has_labels: bool,
}

/// Label column handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn<'a> {
    /// Missing column is a `MissingColumn` error.
    Required(&'a str),
    /// Used if present, otherwise every column is a feature.
    Optional(&'a str),
}

impl LabelColumn<'_> {
    fn name(&self) -> &str {
        match self {
            LabelColumn::Required(n) | LabelColumn::Optional(n) => n,
        }
    }
}

pub fn load_csv(path: &Path, label: LabelColumn<'_>) -> Result<LoadedCsv, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, label)
}

pub fn read_csv<R: Read>(input: R, label: LabelColumn<'_>) -> Result<LoadedCsv, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let header = rdr.headers().map_err(|e| CliError::Csv(e.to_string()))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(CliError::EmptyFile);
    }
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = names.iter().position(|h| h == label.name());
    if label_idx.is_none() {
        if let LabelColumn::Required(name) = label {
            return Err(CliError::MissingColumn(name.to_string()));
        }
    }
    let feature_names: Vec<String> =
        names.iter().enumerate().filter(|&(i, _)| Some(i) != label_idx).map(|(_, n)| n.clone()).collect();

    let mut records = Vec::new();
    let mut dropped_rows = 0;
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(CliError::Csv(e.to_string())),
            Err(_) => {
                dropped_rows += 1;
                continue;
            }
        };
        if row.len() != names.len() {
            dropped_rows += 1;
            continue;
        }
        let mut features = Vec::with_capacity(feature_names.len());
        let mut ok = true;
        for (i, field) in row.iter().enumerate() {
            if Some(i) == label_idx {
                continue;
            }
            match field.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            dropped_rows += 1;
            continue;
        }
        let raw_label = label_idx.map(|i| row[i].trim().to_string()).unwrap_or_default();
        records.push(FlowRecord { features, raw_label });
    }
    Ok(LoadedCsv { feature_names, records, dropped_rows, has_labels: label_idx.is_some() })
}
