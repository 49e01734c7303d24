use clids_core::data::{synth_generate, Difficulty, FlowDataset, NormStats};
use clids_core::model::{ModelConfig, ModelGraph};
use clids_core::optim::{TrainConfig, Trainer};

/// Plain logistic regression by full-batch gradient descent; returns the
/// number of misclassified rows once it stops improving.
fn logistic_errors(ds: &FlowDataset) -> usize {
    let f = ds.n_features();
    let mut w = vec![0.0f64; f + 1];
    let err = |w: &[f64]| {
        (0..ds.len())
            .filter(|&i| {
                let z: f64 = ds.row(i).iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + w[f];
                (z >= 0.0) != (ds.labels()[i] == 1)
            })
            .count()
    };
    for _ in 0..2000 {
        if err(&w) == 0 {
            return 0;
        }
        let mut g = vec![0.0; f + 1];
        for i in 0..ds.len() {
            let x = ds.row(i);
            let z: f64 = x.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + w[f];
            let d = 1.0 / (1.0 + (-z).exp()) - ds.labels()[i] as f64;
            for j in 0..f {
                g[j] += d * x[j];
            }
            g[f] += d;
        }
        for (w, g) in w.iter_mut().zip(&g) {
            *w -= 0.5 * g / ds.len() as f64;
        }
    }
    err(&w)
}

#[test]
fn separable_set_is_fit_within_200_epochs_at_defaults() {
    let raw = synth_generate(256, 0, Difficulty::Separable).unwrap();
    let stats = NormStats::fit(&raw).unwrap();
    let train = stats.apply(raw).unwrap();
    assert_eq!(logistic_errors(&train), 0, "synthetic set should be linearly separable");

    let cfg = TrainConfig { epochs: 200, ..TrainConfig::default() };
    let mut model = ModelGraph::<f32>::build(&ModelConfig::default(), 0).unwrap();
    let mut trainer = Trainer::new(&model, cfg).unwrap();
    let mut reached = None;
    for _ in 0..200 {
        let rec = trainer.run_epoch(&mut model, &train, None).unwrap();
        if rec.train_accuracy == 1.0 {
            reached = Some(rec.epoch);
            break;
        }
    }
    assert!(reached.is_some(), "train accuracy never reached 1.0 in 200 epochs");
}
