use serde::{Deserialize, Serialize};

use crate::data::{batch_iter, Dataset};
use crate::error::{Error, Result};
use crate::eval::predict_dataset;
use crate::model::{cross_entropy_loss, ModelSpec, Network, Params};
use crate::rng::{stream_rng, Stream};
use crate::tensor::Scalar;
use crate::train::{init_params, OptimizerState, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches (train mode).
    pub loss: f64,
    /// Training accuracy accumulated during the epoch (train mode).
    pub accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome<T> {
    /// `spec` with the configured activation applied.
    pub spec: ModelSpec,
    pub params: Params<T>,
    pub history: History,
}

fn check_dataset(spec: &ModelSpec, ds: &Dataset, what: &str) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::Parameter(format!("{what} set is empty")));
    }
    if ds.class_count() != spec.classes {
        return Err(Error::Shape(format!(
            "{what} set has {} classes, model head has {}",
            ds.class_count(),
            spec.classes
        )));
    }
    if ds.side() != spec.input_side {
        return Err(Error::Shape(format!(
            "{what} images are {0}x{0}, model expects {1}x{1}",
            ds.side(),
            spec.input_side
        )));
    }
    Ok(())
}

/// Eval-mode loss and accuracy over a whole dataset.
pub fn evaluate_loss_accuracy<T: Scalar>(spec: &ModelSpec, params: &Params<T>, ds: &Dataset) -> Result<(f64, f64)> {
    let probs = predict_dataset(spec, params, ds)?;
    let y = crate::data::one_hot::<T>(ds.labels(), ds.class_count())?;
    let loss = cross_entropy_loss(&probs, &y)?;
    let correct = probs
        .argmax_rows()
        .iter()
        .zip(ds.labels())
        .filter(|(p, l)| p == l)
        .count();
    Ok((loss, correct as f64 / ds.len() as f64))
}

pub fn fit<T: Scalar>(
    spec: &ModelSpec,
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<FitOutcome<T>> {
    fit_with(spec, train, val, cfg, |_| {})
}

/// Trains from a fresh initialization, calling `on_epoch` after every epoch.
pub fn fit_with<T: Scalar>(
    spec: &ModelSpec,
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<FitOutcome<T>> {
    cfg.validate()?;
    let spec = spec.clone().with_activation(cfg.activation);
    check_dataset(&spec, train, "training")?;
    if let Some(v) = val {
        check_dataset(&spec, v, "validation")?;
    }

    let params = init_params::<T>(&spec, cfg.initializer, cfg.seed)?;
    let mut net = Network::new(spec.clone(), params)?;
    let mut opt = OptimizerState::<T>::for_spec(cfg.optimizer, &spec);
    let mut history = History::default();

    for epoch in 0..cfg.epochs {
        let mut dropout_rng = stream_rng(cfg.seed, Stream::Dropout, epoch as u64);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, batch) in batch_iter::<T>(train, cfg.batch_size, cfg.seed, epoch).enumerate() {
            let probs = net.forward_train(&batch.x, &mut dropout_rng)?;
            let loss = cross_entropy_loss(&probs, &batch.y)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            loss_sum += loss * batch.indices.len() as f64;
            correct += probs
                .argmax_rows()
                .iter()
                .zip(&batch.indices)
                .filter(|(p, &i)| **p == train.labels()[i])
                .count();
            let grads = net.backward(&batch.y)?;
            match opt.step(net.params_mut(), &grads, cfg.learning_rate) {
                Err(Error::NonFiniteGradient { .. }) => {
                    return Err(Error::Diverged {
                        epoch,
                        batch: b,
                        loss: f64::NAN,
                    })
                }
                other => other?,
            }
        }
        let (val_loss, val_accuracy) = match val {
            Some(v) => {
                let (l, a) = evaluate_loss_accuracy(&spec, net.params(), v)?;
                (Some(l), Some(a))
            }
            None => (None, None),
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            loss: loss_sum / train.len() as f64,
            accuracy: correct as f64 / train.len() as f64,
            val_loss,
            val_accuracy,
        };
        log::info!(
            "epoch {}/{} - loss {:.4} - accuracy {:.4}{}",
            record.epoch,
            cfg.epochs,
            record.loss,
            record.accuracy,
            record
                .val_accuracy
                .map(|a| format!(" - val_accuracy {a:.4}"))
                .unwrap_or_default()
        );
        on_epoch(&record);
        history.epochs.push(record);
    }
    history.steps = opt.step_count();
    Ok(FitOutcome {
        spec,
        params: net.into_params(),
        history,
    })
}
