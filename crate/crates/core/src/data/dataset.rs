use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{load_recording, make_windows, save_recording};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

/// A `T × N` window with its class and, once split, its partition.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub input: Matrix,
    pub label: usize,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub windows: Vec<LabeledWindow>,
    pub num_classes: usize,
}

impl LabeledDataset {
    pub fn new(num_classes: usize) -> Self {
        Self {
            windows: Vec::new(),
            num_classes,
        }
    }

    pub fn push(&mut self, input: Matrix, label: usize) -> Result<()> {
        if label >= self.num_classes {
            return Err(Error::Validation(format!(
                "label {label} out of range for {} classes",
                self.num_classes
            )));
        }
        if let Some(first) = self.windows.first() {
            if first.input.shape() != input.shape() {
                return Err(Error::dim(
                    "dataset window",
                    format!("{}x{}", first.input.rows(), first.input.cols()),
                    format!("{}x{}", input.rows(), input.cols()),
                ));
            }
        }
        self.windows.push(LabeledWindow {
            input,
            label,
            split: None,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// `(T, N)` of the windows.
    pub fn window_shape(&self) -> Option<(usize, usize)> {
        self.windows.first().map(|w| w.input.shape())
    }

    pub fn subset(&self, split: Split) -> Vec<&LabeledWindow> {
        self.windows
            .iter()
            .filter(|w| w.split == Some(split))
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for w in &self.windows {
            counts[w.label] += 1;
        }
        counts
    }

    /// Copy with every window z-scored by `stats`.
    pub fn normalized(&self, stats: &NormStats) -> Result<Self> {
        let windows = self
            .windows
            .iter()
            .map(|w| {
                Ok(LabeledWindow {
                    input: stats.apply(&w.input)?,
                    ..w.clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            windows,
            num_classes: self.num_classes,
        })
    }
}

/// Tags every window train/val/test, stratified by class.
///
/// Within each class the windows are shuffled with `seed`, then the first
/// `⌊f_val·n⌋` become validation, the next `⌊f_test·n⌋` test, and the rest
/// train.
pub fn split_dataset(ds: &mut LabeledDataset, fractions: (f64, f64, f64), seed: u64) -> Result<()> {
    let (ft, fv, fs) = fractions;
    if [ft, fv, fs].iter().any(|f| !(0.0..=1.0).contains(f)) || (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions {fractions:?} must be in [0, 1] and sum to 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class in 0..ds.num_classes {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.windows[i].label == class).collect();
        if idx.len() < 3 {
            return Err(Error::Validation(format!(
                "class {class} has {} windows; stratified splitting needs at least 3",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n = idx.len() as f64;
        let n_val = (fv * n + 1e-9).floor() as usize;
        let n_test = (fs * n + 1e-9).floor() as usize;
        for (pos, &i) in idx.iter().enumerate() {
            ds.windows[i].split = Some(if pos < n_val {
                Split::Val
            } else if pos < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            });
        }
    }
    Ok(())
}

/// Per-sensor mean and standard deviation of the training windows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub const STD_FLOOR: f64 = 1e-8;

impl NormStats {
    /// Population statistics over every step of every window, floored at
    /// [`STD_FLOOR`].
    pub fn fit(windows: &[&Matrix]) -> Result<Self> {
        let first = windows
            .first()
            .ok_or_else(|| Error::Validation("cannot fit normalization on zero windows".into()))?;
        let n = first.cols();
        let mut count = 0usize;
        let mut mean = vec![0.0; n];
        for w in windows {
            if w.cols() != n {
                return Err(Error::dim("fit_normalization", n, w.cols()));
            }
            for r in 0..w.rows() {
                for (m, v) in mean.iter_mut().zip(w.row(r)) {
                    *m += v;
                }
            }
            count += w.rows();
        }
        mean.iter_mut().for_each(|m| *m /= count as f64);
        let mut var = vec![0.0; n];
        for w in windows {
            for r in 0..w.rows() {
                for ((s, v), m) in var.iter_mut().zip(w.row(r)).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
        }
        let std = var
            .into_iter()
            .map(|s| (s / count as f64).sqrt().max(STD_FLOOR))
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, window: &Matrix) -> Result<Matrix> {
        if window.cols() != self.mean.len() {
            return Err(Error::dim(
                "apply_normalization",
                format!("{} sensors in stats", self.mean.len()),
                format!("{} in window", window.cols()),
            ));
        }
        let mut out = window.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

pub fn fit_normalization(train: &[&Matrix]) -> Result<NormStats> {
    NormStats::fit(train)
}

pub fn apply_normalization(stats: &NormStats, window: &Matrix) -> Result<Matrix> {
    stats.apply(window)
}

/// Reads `manifest.csv` (`path,label`, paths relative to `dir`) and cuts
/// every listed recording into windows.
pub fn load_dataset_dir(
    dir: &Path,
    window: usize,
    stride: usize,
    num_classes: Option<usize>,
) -> Result<LabeledDataset> {
    let manifest = dir.join("manifest.csv");
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&manifest)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Parse {
                path: manifest.clone(),
                msg: e.to_string(),
            },
            _ => Error::Csv(e),
        })?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "label"] {
        return Err(Error::Parse {
            path: manifest,
            msg: format!("header must be `path,label`, found {:?}", headers.as_slice()),
        });
    }
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Ragged {
                path: manifest.clone(),
                row: i + 2,
                expected: 2,
                found: record.len(),
            });
        }
        let label: usize = record[1].parse().map_err(|_| Error::Numeric {
            path: manifest.clone(),
            row: i + 2,
            col: 2,
            cell: record[1].to_string(),
        })?;
        entries.push((record[0].to_string(), label));
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            path: manifest,
            msg: "manifest lists no recordings".into(),
        });
    }
    let classes = num_classes.unwrap_or_else(|| entries.iter().map(|e| e.1).max().unwrap_or(0) + 1);
    let mut ds = LabeledDataset::new(classes);
    for (file, label) in entries {
        let mut rec = load_recording(&dir.join(&file))?;
        rec.label = label;
        for w in make_windows(&rec, window, stride)? {
            ds.push(w, label)?;
        }
    }
    Ok(ds)
}

/// Writes each window as its own recording plus a manifest, readable by
/// [`load_dataset_dir`] with `window = T`.
pub fn save_dataset_dir(ds: &LabeledDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from("path,label\n");
    for (i, w) in ds.windows.iter().enumerate() {
        let name = format!("rec_{i:05}.csv");
        save_recording(&w.input, &dir.join(&name))?;
        manifest.push_str(&format!("{name},{}\n", w.label));
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, manifest).map_err(|e| Error::io(path, e))
}
