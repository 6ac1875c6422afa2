use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{load_dataset_dir, synth_generate, LabeledDataset, SynthConfig};
use crate::error::{Error, Result};
use crate::eval::{setting_label, SweepCell};
use crate::model::{Arch, ModelConfig};
use crate::training::{prepare_dataset, run_experiment, TrainConfig};

/// Where the windows of a sweep come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// A directory readable by [`load_dataset_dir`].
    Dir {
        path: PathBuf,
        window: usize,
        stride: usize,
    },
    Synth(SynthConfig),
}

/// Architectures × layer settings, each run `repeats` times.
///
/// Grid files are `key = value` lines with `#` comments:
///
/// ```text
/// archs  = dnn, cnn, lstm, gru, hcg
/// layers = 8,8 | 8,8,8 | 8,8,8,8 | 8,8,8,8,8
/// epochs = 10
/// lr     = 0.001
/// batch  = 64
/// seed   = 0
/// synth  = default            # preset name or config file
/// synth.samples_per_class = 40
/// ```
///
/// `data = <dir>` (with optional `window`, `stride`) replaces `synth`.
/// Relative paths resolve against the grid file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub archs: Vec<Arch>,
    pub layers: Vec<Vec<usize>>,
    pub train: TrainConfig,
    pub split_seed: u64,
    pub data: DataSource,
}

impl SweepGrid {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut archs = Arch::ALL.to_vec();
        let mut layers: Option<Vec<Vec<usize>>> = None;
        let mut train = TrainConfig::default();
        let mut split_seed = None;
        let mut data_dir: Option<PathBuf> = None;
        let (mut window, mut stride) = (128, 64);
        let mut synth_base: Option<String> = None;
        let mut synth_overrides = String::new();

        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::Config(format!("grid line {}: bad value for {key}: {value:?}", n + 1));
            let int = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
            if let Some(field) = key.strip_prefix("synth.") {
                synth_overrides.push_str(&format!("{field} = {value}\n"));
                continue;
            }
            match key {
                "archs" => {
                    archs = value
                        .split(',')
                        .map(str::parse)
                        .collect::<Result<Vec<Arch>>>()?;
                }
                "layers" => {
                    layers = Some(
                        value
                            .split('|')
                            .map(|s| s.split(',').map(int).collect::<Result<Vec<usize>>>())
                            .collect::<Result<_>>()?,
                    );
                }
                "epochs" => train.epochs = int(value)?,
                "batch" => train.batch_size = int(value)?,
                "lr" => train.learning_rate = value.parse().map_err(|_| bad())?,
                "seed" => train.seed = value.parse().map_err(|_| bad())?,
                "split_seed" => split_seed = Some(value.parse().map_err(|_| bad())?),
                "data" => data_dir = Some(base_dir.join(value)),
                "window" => window = int(value)?,
                "stride" => stride = int(value)?,
                "synth" => synth_base = Some(value.to_string()),
                _ => {
                    return Err(Error::Config(format!(
                        "grid line {}: unknown key {key:?}",
                        n + 1
                    )))
                }
            }
        }

        let layers = layers.ok_or_else(|| Error::Config("grid needs a `layers` entry".into()))?;
        if archs.is_empty() || layers.is_empty() || layers.iter().any(|l| l.is_empty()) {
            return Err(Error::Config("grid needs at least one arch and one layer setting".into()));
        }
        train.validate()?;
        let data = match data_dir {
            Some(path) => {
                if synth_base.is_some() || !synth_overrides.is_empty() {
                    return Err(Error::Config("grid sets both `data` and `synth`".into()));
                }
                DataSource::Dir {
                    path,
                    window,
                    stride,
                }
            }
            None => {
                let base = match synth_base.as_deref() {
                    None => SynthConfig::default(),
                    Some(name) if !name.contains(['/', '.']) => SynthConfig::preset(name)?,
                    Some(file) => SynthConfig::from_file(&base_dir.join(file))?,
                };
                DataSource::Synth(base.with_overrides(&synth_overrides)?)
            }
        };
        Ok(Self {
            archs,
            layers,
            split_seed: split_seed.unwrap_or(train.seed),
            train,
            data,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn load_data(&self) -> Result<LabeledDataset> {
        match &self.data {
            DataSource::Dir {
                path,
                window,
                stride,
            } => load_dataset_dir(path, *window, *stride, None),
            DataSource::Synth(cfg) => synth_generate(cfg),
        }
    }
}

/// Trains every (architecture, setting, repeat) job in parallel and returns
/// one cell of test accuracies per (architecture, setting), in grid order.
/// Repeat `r` uses model and shuffle seed `seed + r` on a fixed split.
pub fn run_sweep(grid: &SweepGrid, repeats: usize) -> Result<Vec<SweepCell>> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let (prepared, _) = prepare_dataset(&grid.load_data()?, grid.split_seed)?;
    let (window, sensors) = prepared
        .window_shape()
        .ok_or_else(|| Error::Validation("sweep dataset is empty".into()))?;
    let classes = prepared.num_classes;

    let jobs: Vec<(Arch, &Vec<usize>, u64)> = grid
        .archs
        .iter()
        .flat_map(|&a| {
            grid.layers
                .iter()
                .flat_map(move |l| (0..repeats as u64).map(move |r| (a, l, r)))
        })
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(arch, sizes, r)| {
            let seed = grid.train.seed.wrapping_add(r);
            let mut model_cfg = ModelConfig::with_layers(arch, sensors, window, classes, sizes)?;
            model_cfg.seed = seed;
            let train_cfg = TrainConfig {
                seed,
                ..grid.train.clone()
            };
            let acc = run_experiment(&prepared, model_cfg, &train_cfg)?.test.accuracy;
            log::info!("{} {} repeat {r}: test accuracy {acc:.4}", arch.label(), setting_label(sizes));
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(scores
        .chunks(repeats)
        .zip(jobs.iter().step_by(repeats))
        .map(|(s, &(arch, sizes, _))| SweepCell {
            arch,
            setting: setting_label(sizes),
            scores: s.to_vec(),
        })
        .collect())
}
