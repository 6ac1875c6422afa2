//! Recordings, windows, splits, normalization and the synthetic generator.

mod dataset;
mod recording;
mod synth;

pub use dataset::{
    apply_normalization, fit_normalization, load_dataset_dir, save_dataset_dir, split_dataset,
    LabeledDataset, LabeledWindow, NormStats, Split, STD_FLOOR,
};
pub use recording::{build_input_matrix, load_recording, make_windows, save_recording, SensorRecording};
pub use synth::{synth_generate, SynthConfig};
