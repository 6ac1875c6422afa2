//! Synthetic damage-state recordings.
//!
//! Class `c`, sensor `i`:
//! `x_i(t) = Σ_m A_{c,m} · w_{m,i} · sin(2π f_{c,m} t / fs + φ_m) + ε`,
//! `ε ~ N(0, σ²)`, with a fresh phase per sample and mode. Unless given
//! explicitly, `f_{c,m} = base_m · (1 − shift · c)` (damage lowers the modal
//! frequencies) and `w_{m,i} = sin((m+1) π (i+1) / (N+1))`, the mode shapes of
//! a simply supported beam, so neighbouring sensors move together.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub sensors: usize,
    pub window: usize,
    pub samples_per_class: usize,
    pub sample_rate: f64,
    pub noise_std: f64,
    pub seed: u64,
    pub base_frequencies: Vec<f64>,
    pub frequency_shift: f64,
    /// Per-class rows of modal frequencies; overrides base and shift.
    pub frequencies: Option<Vec<Vec<f64>>>,
    /// Per-class rows of modal amplitudes; defaults to all ones.
    pub amplitudes: Option<Vec<Vec<f64>>>,
    /// Per-mode rows of sensor weights; defaults to beam mode shapes.
    pub spatial_weights: Option<Vec<Vec<f64>>>,
}

impl Default for SynthConfig {
    /// Four well-separated classes on eight sensors.
    fn default() -> Self {
        Self {
            num_classes: 4,
            sensors: 8,
            window: 128,
            samples_per_class: 200,
            sample_rate: 200.0,
            noise_std: 0.3,
            seed: 0,
            base_frequencies: vec![20.0, 45.0, 70.0],
            frequency_shift: 0.06,
            frequencies: None,
            amplitudes: None,
            spatial_weights: None,
        }
    }
}

impl SynthConfig {
    /// Noisier signals with closer class frequencies.
    pub fn harder() -> Self {
        Self {
            noise_std: 1.0,
            frequency_shift: 0.03,
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default()),
            "harder" => Ok(Self::harder()),
            other => Err(Error::Config(format!(
                "unknown synthetic preset {other:?} (expected default or harder)"
            ))),
        }
    }

    pub fn modes(&self) -> usize {
        self.base_frequencies.len()
    }

    /// `f_{c,m}` for every class.
    pub fn class_frequencies(&self) -> Vec<Vec<f64>> {
        match &self.frequencies {
            Some(f) => f.clone(),
            None => (0..self.num_classes)
                .map(|c| {
                    let scale = 1.0 - self.frequency_shift * c as f64;
                    self.base_frequencies.iter().map(|f| f * scale).collect()
                })
                .collect(),
        }
    }

    pub fn class_amplitudes(&self) -> Vec<Vec<f64>> {
        self.amplitudes
            .clone()
            .unwrap_or_else(|| vec![vec![1.0; self.modes()]; self.num_classes])
    }

    pub fn weights(&self) -> Vec<Vec<f64>> {
        self.spatial_weights.clone().unwrap_or_else(|| {
            let n = self.sensors as f64;
            (0..self.modes())
                .map(|m| {
                    (0..self.sensors)
                        .map(|i| ((m + 1) as f64 * PI * (i + 1) as f64 / (n + 1.0)).sin())
                        .collect()
                })
                .collect()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_classes < 2 || self.sensors == 0 || self.window == 0 {
            return fail(format!(
                "need >= 2 classes, >= 1 sensor and window >= 1 (got {}, {}, {})",
                self.num_classes, self.sensors, self.window
            ));
        }
        if self.samples_per_class == 0 {
            return fail("samples_per_class must be >= 1".into());
        }
        if !(self.sample_rate > 0.0) || !(self.noise_std >= 0.0) {
            return fail("sample_rate must be > 0 and noise_std >= 0".into());
        }
        if self.modes() == 0 {
            return fail("at least one base frequency is required".into());
        }
        let m = self.modes();
        let check_rows = |what: &str, rows: &Vec<Vec<f64>>, n_rows: usize, n_cols: usize| {
            if rows.len() != n_rows || rows.iter().any(|r| r.len() != n_cols) {
                Err(Error::Config(format!(
                    "{what} must be {n_rows} rows of {n_cols} values"
                )))
            } else {
                Ok(())
            }
        };
        if let Some(f) = &self.frequencies {
            check_rows("frequencies", f, self.num_classes, m)?;
        }
        if let Some(a) = &self.amplitudes {
            check_rows("amplitudes", a, self.num_classes, m)?;
        }
        if let Some(w) = &self.spatial_weights {
            check_rows("spatial_weights", w, m, self.sensors)?;
        }
        let nyquist = self.sample_rate / 2.0;
        for (c, row) in self.class_frequencies().iter().enumerate() {
            for &f in row {
                if !(f > 0.0 && f < nyquist) {
                    return fail(format!(
                        "class {c} frequency {f} Hz is outside (0, {nyquist}) Hz (Nyquist)"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Parses the flat `key = value` format. Lists are comma-separated; the
    /// per-class and per-mode tables separate rows with `;`.
    pub fn parse(text: &str) -> Result<Self> {
        Self::default().with_overrides(text)
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn with_overrides(self, text: &str) -> Result<Self> {
        let mut cfg = self;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::Config(format!("line {}: bad value for {key}: {value:?}", n + 1));
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
            let list = |v: &str| v.split(',').map(num).collect::<Result<Vec<f64>>>();
            let table = |v: &str| v.split(';').map(list).collect::<Result<Vec<Vec<f64>>>>();
            let int = |v: &str| v.parse::<usize>().map_err(|_| bad());
            match key {
                "num_classes" => cfg.num_classes = int(value)?,
                "sensors" => cfg.sensors = int(value)?,
                "window" => cfg.window = int(value)?,
                "samples_per_class" => cfg.samples_per_class = int(value)?,
                "sample_rate" => cfg.sample_rate = num(value)?,
                "noise_std" => cfg.noise_std = num(value)?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                "base_frequencies" => cfg.base_frequencies = list(value)?,
                "frequency_shift" => cfg.frequency_shift = num(value)?,
                "frequencies" => cfg.frequencies = Some(table(value)?),
                "amplitudes" => cfg.amplitudes = Some(table(value)?),
                "spatial_weights" => cfg.spatial_weights = Some(table(value)?),
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {key:?}",
                        n + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Inverse of [`parse`](Self::parse).
    pub fn to_config_string(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let table = |t: &[Vec<f64>]| t.iter().map(|r| list(r)).collect::<Vec<_>>().join("; ");
        let mut s = String::new();
        let _ = writeln!(s, "num_classes = {}", self.num_classes);
        let _ = writeln!(s, "sensors = {}", self.sensors);
        let _ = writeln!(s, "window = {}", self.window);
        let _ = writeln!(s, "samples_per_class = {}", self.samples_per_class);
        let _ = writeln!(s, "sample_rate = {}", self.sample_rate);
        let _ = writeln!(s, "noise_std = {}", self.noise_std);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "base_frequencies = {}", list(&self.base_frequencies));
        let _ = writeln!(s, "frequency_shift = {}", self.frequency_shift);
        if let Some(f) = &self.frequencies {
            let _ = writeln!(s, "frequencies = {}", table(f));
        }
        if let Some(a) = &self.amplitudes {
            let _ = writeln!(s, "amplitudes = {}", table(a));
        }
        if let Some(w) = &self.spatial_weights {
            let _ = writeln!(s, "spatial_weights = {}", table(w));
        }
        s
    }
}

/// Draws `samples_per_class` windows for each class, class by class.
pub fn synth_generate(cfg: &SynthConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let freqs = cfg.class_frequencies();
    let amps = cfg.class_amplitudes();
    let weights = cfg.weights();
    let noise = Normal::new(0.0, cfg.noise_std)
        .map_err(|e| Error::Config(format!("noise_std: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (t_len, n) = (cfg.window, cfg.sensors);
    let mut ds = LabeledDataset::new(cfg.num_classes);
    for c in 0..cfg.num_classes {
        for _ in 0..cfg.samples_per_class {
            let phases: Vec<f64> = (0..cfg.modes()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let mut x = Matrix::zeros(t_len, n);
            for t in 0..t_len {
                let row = x.row_mut(t);
                for m in 0..cfg.modes() {
                    let s = amps[c][m]
                        * (2.0 * PI * freqs[c][m] * t as f64 / cfg.sample_rate + phases[m]).sin();
                    for (v, w) in row.iter_mut().zip(&weights[m]) {
                        *v += s * w;
                    }
                }
                for v in row.iter_mut() {
                    *v += noise.sample(&mut rng);
                }
            }
            ds.push(x, c)?;
        }
    }
    Ok(ds)
}
