//! Adam, the mini-batch training loop, split evaluation and layer sweeps.

mod adam;
mod experiment;
mod sweep;
mod trainer;

pub use adam::{adam_step, AdamState};
pub use experiment::{prepare_dataset, run_experiment, Experiment, DEFAULT_FRACTIONS};
pub use sweep::{run_sweep, DataSource, SweepGrid};
pub use trainer::{evaluate, evaluate_windows, train, EpochRecord, Evaluation, History, TrainConfig};
