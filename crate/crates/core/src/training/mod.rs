//! MSE objective, SGD / Adam updates and the batch-size-1 epoch loop.

mod optimizer;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use optimizer::{clip_norm, step, Optimizer, OptimizerConfig, OptimizerKind};

use crate::error::{Error, Result};
use crate::lstm::{Model, ModelConfig};
use crate::metrics::{evaluate, EvalResult};
use crate::preprocess::WindowedDataset;

/// Mean squared residual.
pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::Shape(format!(
            "{} targets vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Shape("mse of empty vectors".into()));
    }
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-window squared error on scaled targets.
    pub mean_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub param_count: usize,
    pub train_windows: usize,
    pub epochs: Vec<EpochRecord>,
    pub total_seconds: f64,
    pub train_metrics: EvalResult,
    pub test_metrics: Option<EvalResult>,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }
}

/// One evaluated window in original AQI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub date: NaiveDate,
    pub actual_aqi: f64,
    pub predicted_aqi: f64,
}

pub fn check_compatible(model: &Model, data: &WindowedDataset) -> Result<()> {
    if model.input_dim() != data.input_dim() {
        return Err(Error::Incompatible(format!(
            "model expects {} input features, dataset has {}",
            model.input_dim(),
            data.input_dim()
        )));
    }
    Ok(())
}

/// Runs epochs of per-window forward, backward and update on an existing
/// model.
pub fn fit(model: &mut Model, data: &WindowedDataset, opt: &OptimizerConfig) -> Result<Vec<EpochRecord>> {
    opt.validate()?;
    check_compatible(model, data)?;
    if data.is_empty() {
        return Err(Error::Input("training split contains no windows".into()));
    }
    let mut optimizer = Optimizer::new(opt, model.param_counts().total())?;
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut params = model.trainable();
    let mut records = Vec::with_capacity(opt.epochs);

    for epoch in 1..=opt.epochs {
        let start = Instant::now();
        if opt.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for &idx in &order {
            let w = &data.windows[idx];
            let (loss, grads) = model.loss_and_grad(&w.inputs, w.target)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    window: idx,
                    loss,
                });
            }
            total += loss;
            let mut g = grads.trainable();
            if let Some(c) = opt.clip_norm {
                clip_norm(&mut g, c);
            }
            optimizer.step(&mut params, &g)?;
            model.set_trainable(&params)?;
        }
        records.push(EpochRecord {
            epoch,
            mean_loss: total / data.len() as f64,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

/// Initialises a model from `config` (references drawn from the training
/// inputs) and trains it.
pub fn train(
    config: &ModelConfig,
    train_set: &WindowedDataset,
    test_set: Option<&WindowedDataset>,
    opt: &OptimizerConfig,
) -> Result<(Model, TrainReport)> {
    if train_set.is_empty() {
        return Err(Error::Input("training split contains no windows".into()));
    }
    if config.input_dim != train_set.input_dim() {
        return Err(Error::Incompatible(format!(
            "model input_dim is {}, dataset has {} features",
            config.input_dim,
            train_set.input_dim()
        )));
    }
    if config.seq_len != train_set.seq_len {
        return Err(Error::Incompatible(format!(
            "model seq_len is {}, dataset windows have length {}",
            config.seq_len, train_set.seq_len
        )));
    }
    let started = Instant::now();
    let mut model = Model::init(config, &train_set.distinct_inputs(), opt.seed)?;
    let epochs = fit(&mut model, train_set, opt)?;
    let (train_metrics, _) = evaluate_model(&model, train_set)?;
    let test_metrics = match test_set {
        Some(t) if t.len() >= 2 => Some(evaluate_model(&model, t)?.0),
        _ => None,
    };
    let report = TrainReport {
        model: config.clone(),
        optimizer: opt.clone(),
        seed: opt.seed,
        param_count: model.param_counts().total(),
        train_windows: train_set.len(),
        epochs,
        total_seconds: started.elapsed().as_secs_f64(),
        train_metrics,
        test_metrics,
    };
    Ok((model, report))
}

/// Predictions for every window, inverse-scaled to AQI units.
pub fn predict_dataset(model: &Model, data: &WindowedDataset) -> Result<Vec<Prediction>> {
    check_compatible(model, data)?;
    data.windows
        .iter()
        .map(|w| {
            Ok(Prediction {
                date: w.target_date,
                actual_aqi: w.target_raw,
                predicted_aqi: data.unscale_target(model.predict(&w.inputs)?),
            })
        })
        .collect()
}

pub fn evaluate_model(model: &Model, data: &WindowedDataset) -> Result<(EvalResult, Vec<Prediction>)> {
    let preds = predict_dataset(model, data)?;
    let y: Vec<f64> = preds.iter().map(|p| p.actual_aqi).collect();
    let y_hat: Vec<f64> = preds.iter().map(|p| p.predicted_aqi).collect();
    Ok((evaluate(&y, &y_hat)?, preds))
}

fn write_file(path: &Path, body: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body).map_err(|e| Error::io(path, e))
}

fn csv_bytes<F>(header: &[&str], rows: usize, mut row: F) -> Result<Vec<u8>>
where
    F: FnMut(usize) -> Vec<String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Internal(format!("csv encoding: {e}"));
    w.write_record(header).map_err(fail)?;
    for i in 0..rows {
        w.write_record(row(i)).map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| Error::Internal(format!("csv encoding: {e}")))
}

/// `epoch,mean_loss`. Deterministic for a fixed seed.
pub fn losses_csv(epochs: &[EpochRecord]) -> Result<Vec<u8>> {
    csv_bytes(&["epoch", "mean_loss"], epochs.len(), |i| {
        vec![epochs[i].epoch.to_string(), epochs[i].mean_loss.to_string()]
    })
}

/// `epoch,seconds`. Wall-clock, so it varies between runs.
pub fn timings_csv(epochs: &[EpochRecord]) -> Result<Vec<u8>> {
    csv_bytes(&["epoch", "seconds"], epochs.len(), |i| {
        vec![epochs[i].epoch.to_string(), format!("{:.6}", epochs[i].seconds)]
    })
}

/// `date,actual_aqi,predicted_aqi`.
pub fn predictions_csv(preds: &[Prediction]) -> Result<Vec<u8>> {
    csv_bytes(&["date", "actual_aqi", "predicted_aqi"], preds.len(), |i| {
        vec![
            preds[i].date.to_string(),
            preds[i].actual_aqi.to_string(),
            preds[i].predicted_aqi.to_string(),
        ]
    })
}

pub fn write_losses_csv(path: &Path, epochs: &[EpochRecord]) -> Result<()> {
    write_file(path, &losses_csv(epochs)?)
}

pub fn write_timings_csv(path: &Path, epochs: &[EpochRecord]) -> Result<()> {
    write_file(path, &timings_csv(epochs)?)
}

pub fn write_predictions_csv(path: &Path, preds: &[Prediction]) -> Result<()> {
    write_file(path, &predictions_csv(preds)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::ModelKind;
    use crate::preprocess::{scale_and_window, CleanSeries, SplitRule};

    fn linear_dataset() -> (WindowedDataset, WindowedDataset) {
        let start = NaiveDate::from_ymd_opt(2019, 11, 1).unwrap();
        let n = 70;
        let series = CleanSeries {
            dates: (0..n).map(|i| start + chrono::Days::new(i)).collect(),
            columns: vec!["x".into(), "AQI".into()],
            rows: (0..n)
                .map(|i| vec![(i % 7) as f64, 50.0 + (i % 7) as f64 * 10.0])
                .collect(),
            target_column: 1,
        };
        scale_and_window(&series, 3, &SplitRule::default()).unwrap()
    }

    fn tiny(kind: ModelKind) -> ModelConfig {
        ModelConfig {
            kind,
            input_dim: 2,
            hidden: 3,
            n_qubits: 2,
            n_refs: 4,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        assert!(matches!(mse(&[0.0], &[]), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_learning_rate_freezes_params() {
        let (tr, _) = linear_dataset();
        for kind in [ModelKind::Classical, ModelKind::Qk] {
            let mut model = Model::init(&tiny(kind), &tr.distinct_inputs(), 3).unwrap();
            let before = model.clone();
            let opt = OptimizerConfig {
                learning_rate: 0.0,
                epochs: 2,
                ..OptimizerConfig::default()
            };
            fit(&mut model, &tr, &opt).unwrap();
            assert_eq!(model, before);
        }
    }

    #[test]
    fn loss_decreases_and_is_reproducible() {
        let (tr, te) = linear_dataset();
        let opt = OptimizerConfig {
            learning_rate: 0.01,
            ..OptimizerConfig::default()
        };
        for kind in [ModelKind::Classical, ModelKind::Qk] {
            let (_, a) = train(&tiny(kind), &tr, Some(&te), &opt).unwrap();
            let (_, b) = train(&tiny(kind), &tr, Some(&te), &opt).unwrap();
            assert_eq!(a.epochs.len(), 20);
            let l = a.losses();
            assert!(l[19] < l[0], "{kind}: {l:?}");
            assert_eq!(losses_csv(&a.epochs).unwrap(), losses_csv(&b.epochs).unwrap());
        }
    }

    #[test]
    fn sgd_step_is_exact() {
        let (tr, _) = linear_dataset();
        let model = Model::init(&tiny(ModelKind::Qk), &tr.distinct_inputs(), 1).unwrap();
        let w = &tr.windows[0];
        let (_, g) = model.loss_and_grad(&w.inputs, w.target).unwrap();
        let sgd = OptimizerConfig {
            kind: OptimizerKind::Sgd,
            learning_rate: 0.05,
            ..OptimizerConfig::default()
        };
        let mut updated = model.clone();
        step(&mut updated, &g, &mut Optimizer::new(&sgd, 0).unwrap()).unwrap();
        let expect: Vec<f64> = model
            .trainable()
            .iter()
            .zip(g.trainable())
            .map(|(p, g)| p - 0.05 * g)
            .collect();
        assert_eq!(updated.trainable(), expect);
    }

    #[test]
    fn non_finite_loss_names_the_window() {
        let (mut tr, _) = linear_dataset();
        tr.windows[5].target = f64::NAN;
        let mut model = Model::init(&tiny(ModelKind::Classical), &[], 0).unwrap();
        let opt = OptimizerConfig {
            shuffle: false,
            ..OptimizerConfig::default()
        };
        match fit(&mut model, &tr, &opt) {
            Err(Error::NonFiniteLoss { epoch, window, .. }) => {
                assert_eq!((epoch, window), (1, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn incompatible_dimensions() {
        let (tr, _) = linear_dataset();
        let cfg = ModelConfig {
            input_dim: 5,
            ..tiny(ModelKind::Classical)
        };
        assert!(matches!(
            train(&cfg, &tr, None, &OptimizerConfig::default()),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let e = [EpochRecord {
            epoch: 1,
            mean_loss: 0.25,
            seconds: 1.5,
        }];
        assert_eq!(losses_csv(&e).unwrap(), b"epoch,mean_loss\n1,0.25\n");
        assert_eq!(timings_csv(&e).unwrap(), b"epoch,seconds\n1,1.500000\n");
    }

    #[test]
    fn prediction_rows_match_windows() {
        let (tr, te) = linear_dataset();
        let model = Model::init(&tiny(ModelKind::Qk), &tr.distinct_inputs(), 0).unwrap();
        assert_eq!(predict_dataset(&model, &te).unwrap().len(), te.len());
    }
}
