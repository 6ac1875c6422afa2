use crate::data::{split_dataset, LabeledDataset, NormStats, Split};
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::training::{evaluate, train, Evaluation, History, TrainConfig};

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.6, 0.2, 0.2);

/// Splits `raw` 60/20/20 with `split_seed` and z-scores every window with
/// statistics of the training windows.
pub fn prepare_dataset(raw: &LabeledDataset, split_seed: u64) -> Result<(LabeledDataset, NormStats)> {
    let mut ds = raw.clone();
    split_dataset(&mut ds, DEFAULT_FRACTIONS, split_seed)?;
    let train: Vec<_> = ds.subset(Split::Train).into_iter().map(|w| &w.input).collect();
    let stats = NormStats::fit(&train)?;
    let normalized = ds.normalized(&stats)?;
    Ok((normalized, stats))
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: Model,
    pub history: History,
    pub test: Evaluation,
}

/// Builds a model for `model_cfg`, trains it on a prepared dataset and scores
/// the test split.
pub fn run_experiment(
    prepared: &LabeledDataset,
    model_cfg: ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<Experiment> {
    let shape = prepared
        .window_shape()
        .ok_or_else(|| Error::Validation("dataset is empty".into()))?;
    if shape != (model_cfg.window, model_cfg.sensors) {
        return Err(Error::dim(
            "experiment",
            format!("model input {}x{}", model_cfg.window, model_cfg.sensors),
            format!("dataset windows {}x{}", shape.0, shape.1),
        ));
    }
    let mut model = Model::new(model_cfg)?;
    let history = train(&mut model, prepared, train_cfg)?;
    let test = evaluate(&model, prepared, Split::Test)?;
    Ok(Experiment {
        model,
        history,
        test,
    })
}
