use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clids_core::data::{
    binarize, split, synth_generate, Difficulty, FlowDataset, FlowRecord, LabelMatch, NormStats, SplitSpec,
    DEFAULT_BENIGN_LABEL,
};
use clids_core::gradcheck;
use clids_core::metrics::{classification_report, roc_and_auc, RocCurve};
use clids_core::model::{Label, ModelConfig, ModelGraph};
use clids_core::nn::Mode;
use clids_core::optim::{TrainConfig, Trainer};
use clids_core::{Error, Tensor};

use crate::artifacts::{
    read_json, write_json, write_roc, DataSummary, MetricsFile, NormFile, TrainReportFile, METRICS_FILE, NORM_FILE,
    ROC_FILE, TRAIN_REPORT_FILE, WEIGHTS_FILE,
};
use crate::cli::{Cli, Command, DifficultyArg, EvaluateArgs, GradcheckArgs, PredictArgs, SynthArgs, TrainArgs};
use crate::error::CliError;
use crate::ingest::{load_csv, LabelColumn, LoadedCsv};

/// Rows per forward pass when scoring.
const SCORE_CHUNK: usize = 256;

pub const SYNTH_MALICIOUS_LABEL: &str = "SyntheticAttack";

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => train(&a, out),
        Command::Evaluate(a) => evaluate(&a, out),
        Command::Predict(a) => predict(&a, out),
        Command::Gradcheck(a) => gradcheck(&a, out),
        Command::Synth(a) => synth(&a, out),
    }
}

fn difficulty(d: DifficultyArg) -> Difficulty {
    match d {
        DifficultyArg::Separable => Difficulty::Separable,
        DifficultyArg::Noisy => Difficulty::Noisy,
    }
}

fn synth_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

fn label_match(prefix: bool) -> LabelMatch {
    if prefix {
        LabelMatch::Prefix
    } else {
        LabelMatch::Exact
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = TrainConfig { epochs: a.epochs, batch_size: a.batch_size, lr: a.lr, seed: a.seed, ..TrainConfig::default() };
    config.validate()?;
    let split_spec = SplitSpec { seed: a.seed, ..SplitSpec::default() };

    let (dataset, names, source, dropped_rows) = match (&a.data, a.synth) {
        (Some(path), None) => {
            let loaded = load_csv(path, LabelColumn::Required(&a.labels.label_col))?;
            if loaded.records.is_empty() {
                return Err(Error::EmptyInput(format!("{}: no usable rows", path.display())).into());
            }
            let ds = binarize(&loaded.records, &a.labels.benign_label, label_match(a.labels.label_prefix))?;
            (ds, loaded.feature_names, path.display().to_string(), loaded.dropped_rows)
        }
        (None, Some(n)) => {
            let ds = synth_generate(n, a.seed, difficulty(a.synth_difficulty))?;
            let names = synth_names(ds.n_features());
            let kind = format!("{:?}", a.synth_difficulty).to_lowercase();
            (ds, names, format!("synthetic:{kind}:{n}"), 0)
        }
        _ => return Err(CliError::InvalidArguments("give exactly one of --data and --synth".into())),
    };

    let (train_raw, val_raw) = split(&dataset, &split_spec)?;
    let stats = NormStats::fit(&train_raw)?;
    let train_set = stats.apply(train_raw)?;
    let val_set = stats.apply(val_raw)?;

    let model_config = ModelConfig { input_features: dataset.n_features(), ..ModelConfig::default() };
    let mut model = ModelGraph::<f32>::build(&model_config, a.seed)?;
    let mut trainer = Trainer::new(&model, config.clone())?;
    let mut epochs = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let r = trainer.run_epoch(&mut model, &train_set, Some(&val_set))?;
        writeln!(
            out,
            "epoch {}/{}  loss {:.4}  acc {:.4}  val_loss {:.4}  val_acc {:.4}",
            r.epoch,
            config.epochs,
            r.train_loss,
            r.train_accuracy,
            r.val_loss.unwrap_or(f64::NAN),
            r.val_accuracy.unwrap_or(f64::NAN)
        )?;
        epochs.push(r);
    }

    let (metrics, roc) = score(&model, &val_set, "validation split", 0)?;

    let counts = |ds: &FlowDataset| {
        let (b, m) = ds.class_counts();
        [b, m]
    };
    let report = TrainReportFile {
        seed: a.seed,
        model: model_config,
        train: config,
        split: split_spec,
        data: DataSummary {
            source,
            label_column: a.labels.label_col.clone(),
            benign_label: a.labels.benign_label.clone(),
            label_prefix: a.labels.label_prefix,
            rows_loaded: dataset.len(),
            dropped_rows,
            train_rows: train_set.len(),
            val_rows: val_set.len(),
            train_class_counts: counts(&train_set),
            val_class_counts: counts(&val_set),
        },
        epochs,
    };

    create_dir(&a.out)?;
    fs::write(a.out.join(WEIGHTS_FILE), model.to_weights_bytes())?;
    write_json(&a.out.join(NORM_FILE), &NormFile::new(&stats, &names))?;
    write_json(&a.out.join(TRAIN_REPORT_FILE), &report)?;
    write_json(&a.out.join(METRICS_FILE), &metrics)?;
    write_roc(&a.out.join(ROC_FILE), roc.as_ref())?;
    summarize(out, &metrics)?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

fn summarize(out: &mut dyn Write, m: &MetricsFile) -> Result<(), CliError> {
    let s = &m.report.scalar;
    writeln!(
        out,
        "{}: rows {}  loss {:.4}  accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  fpr {:.4}  auc {}",
        m.source,
        m.rows,
        m.loss,
        s.accuracy,
        s.precision,
        s.recall,
        s.f1,
        s.fpr,
        m.auc.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
    )?;
    Ok(())
}

/// Infer-mode probabilities for every row of a normalized feature matrix.
fn probabilities(model: &ModelGraph<f32>, features: &[f64], width: usize) -> Result<Vec<(f64, f64)>, CliError> {
    let mut probs = Vec::with_capacity(features.len() / width);
    for chunk in features.chunks(SCORE_CHUNK * width) {
        let x = Tensor::new(&[chunk.len() / width, width], chunk.iter().map(|&v| v as f32).collect())?;
        probs.extend(model.predict(&x)?.into_iter().map(|p| p.probabilities));
    }
    Ok(probs)
}

/// Metrics and ROC for a normalized labelled dataset.
fn score(
    model: &ModelGraph<f32>,
    ds: &FlowDataset,
    source: &str,
    dropped_rows: usize,
) -> Result<(MetricsFile, Option<RocCurve>), CliError> {
    let width = ds.n_features();
    let mut loss = 0.0;
    let mut predicted = Vec::with_capacity(ds.len());
    let mut scores = Vec::with_capacity(ds.len());
    for (chunk, labels) in ds.features().chunks(SCORE_CHUNK * width).zip(ds.labels().chunks(SCORE_CHUNK)) {
        let rows = labels.len();
        let x = Tensor::new(&[rows, width], chunk.iter().map(|&v| v as f32).collect())?;
        let y = Tensor::new(&[rows, 2], labels.iter().flat_map(|&l| [(l == 0) as u8 as f32, l as f32]).collect())?;
        let fwd = model.forward(&x, Mode::Infer)?;
        loss += model.loss(&fwd.cache, &y)? as f64 * rows as f64;
        for p in fwd.probabilities.data().chunks_exact(2) {
            let (b, m) = (p[0] as f64, p[1] as f64);
            predicted.push(Label::from_probabilities(b, m).index());
            scores.push(m);
        }
    }
    let report = classification_report(ds.labels(), &predicted)?;
    let roc = match roc_and_auc(ds.labels(), &scores) {
        Ok(r) => Some(r),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e.into()),
    };
    let metrics = MetricsFile {
        source: source.to_string(),
        rows: ds.len(),
        dropped_rows,
        loss: loss / ds.len() as f64,
        auc: roc.as_ref().map(|r| r.auc),
        report,
    };
    Ok((metrics, roc))
}

/// A trained run loaded back from its directory.
pub struct Run {
    pub report: TrainReportFile,
    pub norm: NormFile,
    pub stats: NormStats,
    pub model: ModelGraph<f32>,
}

pub fn load_run(dir: &Path) -> Result<Run, CliError> {
    let report: TrainReportFile = read_json(&dir.join(TRAIN_REPORT_FILE))?;
    let norm: NormFile = read_json(&dir.join(NORM_FILE))?;
    let stats = norm.stats()?;
    let path = dir.join(WEIGHTS_FILE);
    let bytes = fs::read(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let model = ModelGraph::<f32>::from_weights_bytes(&report.model, &bytes)?;
    if stats.n_features() != model.input_features() {
        return Err(Error::FeatureCountMismatch { expected: model.input_features(), found: stats.n_features() }.into());
    }
    Ok(Run { report, norm, stats, model })
}

/// Puts CSV columns in training order. Same names in another order are
/// permuted; different names with the right count are taken positionally.
fn align(loaded: LoadedCsv, expected: &[String]) -> Result<Vec<FlowRecord>, CliError> {
    let found = &loaded.feature_names;
    if found.len() != expected.len() {
        return Err(Error::FeatureCountMismatch { expected: expected.len(), found: found.len() }.into());
    }
    if found == expected {
        return Ok(loaded.records);
    }
    let perm: Option<Vec<usize>> = expected.iter().map(|name| found.iter().position(|f| f == name)).collect();
    let Some(perm) = perm else {
        return Ok(loaded.records);
    };
    Ok(loaded
        .records
        .into_iter()
        .map(|r| FlowRecord { features: perm.iter().map(|&i| r.features[i]).collect(), raw_label: r.raw_label })
        .collect())
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let run = load_run(&a.model)?;
    let label_col = a.label_col.clone().unwrap_or_else(|| run.report.data.label_column.clone());
    let benign = a.benign_label.clone().unwrap_or_else(|| run.report.data.benign_label.clone());
    let loaded = load_csv(&a.data, LabelColumn::Required(&label_col))?;
    let dropped = loaded.dropped_rows;
    let records = align(loaded, &run.norm.names())?;
    if records.is_empty() {
        return Err(Error::EmptyInput(format!("{}: no usable rows", a.data.display())).into());
    }
    let ds = binarize(&records, &benign, label_match(run.report.data.label_prefix))?;
    let ds = run.stats.apply(ds)?;
    let (metrics, roc) = score(&run.model, &ds, &a.data.display().to_string(), dropped)?;

    let dir: PathBuf = a.out.clone().unwrap_or_else(|| a.model.clone());
    create_dir(&dir)?;
    write_json(&dir.join(METRICS_FILE), &metrics)?;
    write_roc(&dir.join(ROC_FILE), roc.as_ref())?;
    summarize(out, &metrics)?;
    Ok(())
}

fn predict(a: &PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let run = load_run(&a.model)?;
    let label_col = a.label_col.clone().unwrap_or_else(|| run.report.data.label_column.clone());
    let loaded = load_csv(&a.data, LabelColumn::Optional(&label_col))?;
    let dropped = loaded.dropped_rows;
    let records = align(loaded, &run.norm.names())?;

    let width = run.stats.n_features();
    let mut features: Vec<f64> = records.iter().flat_map(|r| r.features.iter().copied()).collect();
    run.stats.apply_rows(&mut features)?;
    let probs = if records.is_empty() { Vec::new() } else { probabilities(&run.model, &features, width)? };

    let mut w = csv::Writer::from_path(&a.out).map_err(|e| CliError::Io(format!("{}: {e}", a.out.display())))?;
    w.write_record(["p_benign", "p_malicious", "label"])?;
    for &(b, m) in &probs {
        w.write_record([b.to_string(), m.to_string(), Label::from_probabilities(b, m).as_str().to_string()])?;
    }
    w.flush()?;
    writeln!(out, "scored {} rows ({} dropped) -> {}", probs.len(), dropped, a.out.display())?;
    Ok(())
}

fn gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(a.tolerance >= 0.0) {
        return Err(CliError::InvalidArguments(format!("tolerance must be >= 0, got {}", a.tolerance)));
    }
    let checks = gradcheck::run_all(a.seed)?;
    let mut failed = Vec::new();
    for c in &checks {
        let ok = c.passes(a.tolerance);
        writeln!(
            out,
            "{:<5} {:<40} worst {:.3e}  entries {:>6}  kinks skipped {}",
            if ok { "ok" } else { "FAIL" },
            c.name,
            c.worst_error,
            c.entries_checked,
            c.kinks_skipped
        )?;
        if !ok {
            failed.push(c.name.clone());
        }
    }
    if failed.is_empty() {
        writeln!(out, "all {} tensors below {:e}", checks.len(), a.tolerance)?;
        Ok(())
    } else {
        Err(CliError::GradcheckFailed(failed))
    }
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ds = synth_generate(a.rows, a.seed, difficulty(a.difficulty))?;
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| CliError::Io(format!("{}: {e}", a.out.display())))?;
    let mut header = synth_names(ds.n_features());
    header.push("label".into());
    w.write_record(&header)?;
    for r in 0..ds.len() {
        let mut row: Vec<String> = ds.row(r).iter().map(|v| v.to_string()).collect();
        row.push(if ds.labels()[r] == 0 { DEFAULT_BENIGN_LABEL } else { SYNTH_MALICIOUS_LABEL }.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    writeln!(out, "wrote {} rows to {}", ds.len(), a.out.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loaded(names: &[&str], rows: &[&[f64]]) -> LoadedCsv {
        LoadedCsv {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            records: rows.iter().map(|r| FlowRecord { features: r.to_vec(), raw_label: String::new() }).collect(),
            dropped_rows: 0,
            has_labels: false,
        }
    }

    #[test]
    fn align_permutes_by_name() {
        let expected = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let out = align(loaded(&["c", "a", "b"], &[&[3.0, 1.0, 2.0]]), &expected).unwrap();
        assert_eq!(out[0].features, vec![1.0, 2.0, 3.0]);
        let out = align(loaded(&["x", "y", "z"], &[&[3.0, 1.0, 2.0]]), &expected).unwrap();
        assert_eq!(out[0].features, vec![3.0, 1.0, 2.0]);
        let err = align(loaded(&["a", "b"], &[&[1.0, 2.0]]), &expected).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert_eq!(err.name(), "FeatureCountMismatch");
    }
}
