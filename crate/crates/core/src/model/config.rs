use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Architectures: the hierarchical model and its four baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arch {
    Hcg,
    Dnn,
    Cnn,
    Lstm,
    Gru,
}

impl Arch {
    pub const ALL: [Arch; 5] = [Arch::Dnn, Arch::Cnn, Arch::Lstm, Arch::Gru, Arch::Hcg];

    pub fn as_str(self) -> &'static str {
        match self {
            Arch::Hcg => "hcg",
            Arch::Dnn => "dnn",
            Arch::Cnn => "cnn",
            Arch::Lstm => "lstm",
            Arch::Gru => "gru",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Arch::Hcg => "HCG",
            Arch::Dnn => "DNN",
            Arch::Cnn => "CNN",
            Arch::Lstm => "LSTM",
            Arch::Gru => "GRU",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hcg" => Ok(Arch::Hcg),
            "dnn" => Ok(Arch::Dnn),
            "cnn" => Ok(Arch::Cnn),
            "lstm" => Ok(Arch::Lstm),
            "gru" => Ok(Arch::Gru),
            other => Err(Error::Config(format!("unknown architecture {other:?}"))),
        }
    }
}

/// Architecture description. Which size lists are used depends on `arch`:
///
/// | arch | conv | recurrent | dense |
/// |------|------|-----------|-------|
/// | HCG  | sensor-wide conv stack | GRU stack | hidden layers of the head |
/// | DNN  | unused | unused | hidden layers on the flattened window |
/// | CNN  | patch conv then conv stack | unused | hidden layers after flatten |
/// | GRU / LSTM | unused | recurrent stack | hidden layers of the head |
///
/// Every model ends in an affine map to `num_classes` logits and a softmax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub sensors: usize,
    pub window: usize,
    pub num_classes: usize,
    pub conv: Vec<usize>,
    pub kernel_len: usize,
    /// CNN only: adjacent sensors covered by a first-layer kernel.
    pub sensor_patch: usize,
    pub recurrent: Vec<usize>,
    pub dense: Vec<usize>,
    pub conv_bias: bool,
    pub seed: u64,
}

impl ModelConfig {
    /// Default sizes for `arch`.
    pub fn new(arch: Arch, sensors: usize, window: usize, num_classes: usize) -> Self {
        let mut cfg = Self {
            arch,
            sensors,
            window,
            num_classes,
            conv: Vec::new(),
            kernel_len: 5,
            sensor_patch: sensors.clamp(1, 5),
            recurrent: Vec::new(),
            dense: Vec::new(),
            conv_bias: true,
            seed: 0,
        };
        match arch {
            Arch::Hcg => {
                cfg.conv = vec![64, 64];
                cfg.recurrent = vec![128, 128];
                cfg.dense = vec![256, 128];
            }
            Arch::Dnn => cfg.dense = vec![512, 256, 128],
            Arch::Cnn => cfg.conv = vec![32, 64, 32],
            Arch::Lstm | Arch::Gru => cfg.recurrent = vec![64, 64, 64],
        }
        cfg
    }

    /// A model whose trainable stack has exactly the listed layer sizes.
    ///
    /// For HCG the first `⌊L/2⌋` sizes are conv kernel counts (at least one)
    /// and the rest GRU widths; for DNN they are hidden dense widths; for CNN
    /// conv kernel counts; for GRU/LSTM recurrent widths. The head is a single
    /// affine map in all cases.
    pub fn with_layers(
        arch: Arch,
        sensors: usize,
        window: usize,
        num_classes: usize,
        sizes: &[usize],
    ) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Config("layer size list is empty".into()));
        }
        let mut cfg = Self::new(arch, sensors, window, num_classes);
        cfg.conv.clear();
        cfg.recurrent.clear();
        cfg.dense.clear();
        match arch {
            Arch::Hcg => {
                if sizes.len() < 2 {
                    return Err(Error::Config(
                        "hcg needs at least one conv and one recurrent layer".into(),
                    ));
                }
                let split = (sizes.len() / 2).max(1);
                cfg.conv = sizes[..split].to_vec();
                cfg.recurrent = sizes[split..].to_vec();
            }
            Arch::Dnn => cfg.dense = sizes.to_vec(),
            Arch::Cnn => cfg.conv = sizes.to_vec(),
            Arch::Lstm | Arch::Gru => cfg.recurrent = sizes.to_vec(),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same architecture with every layer width scaled by `factor` (at least 1).
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &Vec<usize>| -> Vec<usize> {
            v.iter()
                .map(|&s| ((s as f64 * factor).round() as usize).max(1))
                .collect()
        };
        Self {
            conv: scale(&self.conv),
            recurrent: scale(&self.recurrent),
            dense: scale(&self.dense),
            ..self.clone()
        }
    }

    /// Rescales this architecture's widths so its parameter count lands as
    /// close as possible to `target`.
    pub fn matched_to(&self, target: usize) -> Result<Self> {
        self.validate()?;
        let mut best = self.clone();
        let mut best_gap = f64::INFINITY;
        // geometric sweep over 1/512 .. 32 in 0.5% steps
        let mut factor = 1.0 / 512.0;
        while factor <= 32.0 {
            let cand = self.scaled(factor);
            let gap = (cand.param_count() as f64 - target as f64).abs();
            if gap < best_gap {
                best_gap = gap;
                best = cand;
            }
            factor *= 1.005;
        }
        Ok(best)
    }

    /// `arch` at its default proportions, rescaled to the parameter count of
    /// `reference`. Returns `reference` itself when the architectures agree.
    pub fn parity(arch: Arch, reference: &ModelConfig) -> Result<Self> {
        if arch == reference.arch {
            return Ok(reference.clone());
        }
        let mut cfg = Self::new(arch, reference.sensors, reference.window, reference.num_classes);
        cfg.seed = reference.seed;
        cfg.matched_to(reference.param_count())
    }

    /// Conv kernels of the first CNN layer slide over this many sensor offsets.
    pub fn patch_positions(&self) -> usize {
        self.sensors + 1 - self.sensor_patch
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.sensors == 0 || self.window == 0 {
            return fail(format!(
                "sensors ({}) and window ({}) must be >= 1",
                self.sensors, self.window
            ));
        }
        if self.num_classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.kernel_len == 0 {
            return fail("kernel_len must be >= 1".into());
        }
        for (what, sizes) in [
            ("conv", &self.conv),
            ("recurrent", &self.recurrent),
            ("dense", &self.dense),
        ] {
            if sizes.contains(&0) {
                return fail(format!("{what} layer sizes must be positive: {sizes:?}"));
            }
        }
        match self.arch {
            Arch::Hcg => {
                if self.conv.is_empty() || self.recurrent.is_empty() {
                    return fail("hcg needs at least one conv and one recurrent layer".into());
                }
            }
            Arch::Cnn => {
                if self.conv.is_empty() {
                    return fail("cnn needs at least one conv layer".into());
                }
                if self.sensor_patch == 0 || self.sensor_patch > self.sensors {
                    return fail(format!(
                        "sensor_patch {} must be in 1..={}",
                        self.sensor_patch, self.sensors
                    ));
                }
            }
            Arch::Gru | Arch::Lstm => {
                if self.recurrent.is_empty() {
                    return fail(format!("{} needs at least one recurrent layer", self.arch));
                }
            }
            Arch::Dnn => {}
        }
        Ok(())
    }

    /// Trainable parameter count implied by the configuration.
    pub fn param_count(&self) -> usize {
        let bias = |d: usize| if self.conv_bias { d } else { 0 };
        let gru = |i: usize, h: usize| 3 * ((i + h) * h + h);
        let lstm = |i: usize, h: usize| 4 * ((i + h) * h + h);
        let dense = |i: usize, o: usize| i * o + o;
        let k = self.kernel_len;

        let mut total = 0;
        let mut width;
        let mut flat;
        match self.arch {
            Arch::Hcg => {
                width = self.sensors;
                for &d in &self.conv {
                    total += k * width * d + bias(d);
                    width = d;
                }
                for &h in &self.recurrent {
                    total += gru(width, h);
                    width = h;
                }
                flat = width;
            }
            Arch::Dnn => flat = self.window * self.sensors,
            Arch::Cnn => {
                let d0 = self.conv[0];
                total += k * self.sensor_patch * d0 + bias(d0);
                width = self.patch_positions() * d0;
                for &d in &self.conv[1..] {
                    total += k * width * d + bias(d);
                    width = d;
                }
                flat = self.window * width;
            }
            Arch::Gru | Arch::Lstm => {
                width = self.sensors;
                for &h in &self.recurrent {
                    total += if self.arch == Arch::Gru {
                        gru(width, h)
                    } else {
                        lstm(width, h)
                    };
                    width = h;
                }
                flat = width;
            }
        }
        for &d in &self.dense {
            total += dense(flat, d);
            flat = d;
        }
        total + dense(flat, self.num_classes)
    }

    /// Every size of the trainable stack in order, for display.
    pub fn layer_sizes(&self) -> Vec<usize> {
        match self.arch {
            Arch::Hcg | Arch::Cnn => self
                .conv
                .iter()
                .chain(&self.recurrent)
                .chain(&self.dense)
                .copied()
                .collect(),
            _ => self.recurrent.iter().chain(&self.dense).copied().collect(),
        }
    }
}
