use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{LabeledDataset, LabeledWindow, Split};
use crate::error::{Error, Result};
use crate::layers::{argmax_class, mse_loss, one_hot};
use crate::model::Model;
use crate::training::{adam_step, AdamState};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            shuffle: true,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    /// A learning rate of exactly zero is accepted and freezes the model.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config(format!(
                "batch size ({}) and epochs ({}) must be >= 1",
                self.batch_size, self.epochs
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::Config("Adam needs 0 <= beta < 1 and epsilon > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Summed loss over the epoch divided by the number of training windows.
    pub train_loss: f64,
    /// Accuracy of the pre-update predictions made during the epoch.
    pub train_acc: f64,
    /// Summed validation loss divided by the number of validation windows.
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// `epoch,train_loss,train_acc,val_loss,val_acc`, shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Loss, accuracy and predictions over a set of windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Sum over windows and classes of the squared error.
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    pub labels: Vec<usize>,
}

const EVAL_CHUNK: usize = 128;

pub fn evaluate_windows(model: &Model, windows: &[&LabeledWindow]) -> Result<Evaluation> {
    if windows.is_empty() {
        return Err(Error::Validation("cannot evaluate an empty split".into()));
    }
    let mut loss = 0.0;
    let mut predictions = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(EVAL_CHUNK) {
        let xs: Vec<_> = chunk.iter().map(|w| &w.input).collect();
        let labels: Vec<usize> = chunk.iter().map(|w| w.label).collect();
        let probs = model.forward_batch(&xs)?.probs;
        loss += mse_loss(&probs, &one_hot(&labels, model.num_classes())?)?;
        for r in 0..probs.rows() {
            predictions.push(argmax_class(probs.row(r))?);
        }
    }
    let labels: Vec<usize> = windows.iter().map(|w| w.label).collect();
    let correct = predictions.iter().zip(&labels).filter(|(p, l)| p == l).count();
    Ok(Evaluation {
        loss,
        accuracy: correct as f64 / windows.len() as f64,
        predictions,
        labels,
    })
}

/// Evaluates the windows tagged `split`.
pub fn evaluate(model: &Model, ds: &LabeledDataset, split: Split) -> Result<Evaluation> {
    evaluate_windows(model, &ds.subset(split))
}

/// Adam on the summed squared error over mini-batches of the train split,
/// one validation pass per epoch. The model after the last epoch is kept.
pub fn train(model: &mut Model, ds: &LabeledDataset, cfg: &TrainConfig) -> Result<History> {
    cfg.validate()?;
    let train_set = ds.subset(Split::Train);
    let val_set = ds.subset(Split::Val);
    if train_set.is_empty() {
        return Err(Error::Validation("training split is empty".into()));
    }
    if val_set.is_empty() {
        return Err(Error::Validation("validation split is empty".into()));
    }
    if ds.num_classes != model.num_classes() {
        return Err(Error::dim(
            "train",
            format!("model with {} classes", model.num_classes()),
            format!("dataset with {} classes", ds.num_classes),
        ));
    }

    let mut adam = AdamState::new(&*model);
    let mut history = History::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(epoch as u64);
            order.sort_unstable();
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let xs: Vec<_> = batch.iter().map(|&i| &train_set[i].input).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_set[i].label).collect();
            let (loss, grads, probs) = model.loss_and_grads(&xs, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b + 1,
                });
            }
            loss_sum += loss;
            for (r, &l) in labels.iter().enumerate() {
                if argmax_class(probs.row(r))? == l {
                    correct += 1;
                }
            }
            adam_step(model, &grads, &mut adam, cfg)?;
        }
        let val = evaluate_windows(model, &val_set)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            val_loss: val.loss / val_set.len() as f64,
            val_acc: val.accuracy,
        };
        log::info!(
            "epoch {epoch}: train loss {:.4} acc {:.3}, val loss {:.4} acc {:.3}",
            record.train_loss,
            record.train_acc,
            record.val_loss,
            record.val_acc
        );
        history.epochs.push(record);
    }
    Ok(history)
}
