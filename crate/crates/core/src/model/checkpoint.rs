//! Plain-text checkpoints.
//!
//! ```text
//! HCGCKPT v1
//! arch = hcg
//! sensors = 8
//! ...
//! meta.stride = 64
//! tensors = 14
//! tensor conv0.kernels 40 64
//! <one matrix row per line>
//! ...
//! end
//! ```
//!
//! Values are written in shortest round-trip form, so a reload is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Arch, Model, ModelConfig};
use crate::numerics::{Matrix, Parameterized};

const MAGIC: &str = "HCGCKPT";
const VERSION: &str = "v1";

/// Free-form `key = value` annotations stored next to the weights.
pub type Metadata = BTreeMap<String, String>;

fn join(v: &[usize]) -> String {
    v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

/// Serializes `model` and `meta` to the checkpoint text format.
pub fn checkpoint_to_string(model: &Model, meta: &Metadata) -> String {
    let c = model.config();
    let mut s = format!("{MAGIC} {VERSION}\n");
    let _ = writeln!(s, "arch = {}", c.arch);
    let _ = writeln!(s, "sensors = {}", c.sensors);
    let _ = writeln!(s, "window = {}", c.window);
    let _ = writeln!(s, "num_classes = {}", c.num_classes);
    let _ = writeln!(s, "conv = {}", join(&c.conv));
    let _ = writeln!(s, "kernel_len = {}", c.kernel_len);
    let _ = writeln!(s, "sensor_patch = {}", c.sensor_patch);
    let _ = writeln!(s, "recurrent = {}", join(&c.recurrent));
    let _ = writeln!(s, "dense = {}", join(&c.dense));
    let _ = writeln!(s, "conv_bias = {}", c.conv_bias);
    let _ = writeln!(s, "seed = {}", c.seed);
    for (k, v) in meta {
        let _ = writeln!(s, "meta.{k} = {v}");
    }
    let params = model.params();
    let _ = writeln!(s, "tensors = {}", params.len());
    for p in params {
        let (r, cols) = p.value.shape();
        let _ = writeln!(s, "tensor {} {r} {cols}", p.name);
        for row in 0..r {
            let line: Vec<String> = p.value.row(row).iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
    }
    s.push_str("end\n");
    s
}

pub fn save_checkpoint_with(model: &Model, meta: &Metadata, path: &Path) -> Result<()> {
    fs::write(path, checkpoint_to_string(model, meta)).map_err(|e| Error::io(path, e))
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    save_checkpoint_with(model, &Metadata::new(), path)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| bad(format!("{key}: {s:?} is not a size")))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(format!("{key}: cannot parse {v:?}")))
}

/// Parses the checkpoint text format.
pub fn checkpoint_from_str(text: &str) -> Result<(Model, Metadata)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| bad("empty checkpoint"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some(MAGIC) {
        return Err(bad(format!("not a checkpoint (header {header:?})")));
    }
    match head.next() {
        Some(VERSION) => {}
        other => {
            return Err(bad(format!(
                "unsupported checkpoint version {:?}, expected {VERSION}",
                other.unwrap_or("")
            )))
        }
    }

    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    let mut meta = Metadata::new();
    let count: usize = loop {
        let (n, line) = lines.next().ok_or_else(|| bad("truncated before tensors"))?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {n}: expected key = value")))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "tensors" {
            break parse_num(k, v)?;
        }
        if let Some(mk) = k.strip_prefix("meta.") {
            meta.insert(mk.to_string(), v.to_string());
        } else {
            fields.insert(k.to_string(), v.to_string());
        }
    };

    let get = |k: &str| -> Result<&str> {
        fields
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| bad(format!("missing field {k}")))
    };
    let arch: Arch = get("arch")?.parse()?;
    let mut config = ModelConfig::new(
        arch,
        parse_num("sensors", get("sensors")?)?,
        parse_num("window", get("window")?)?,
        parse_num("num_classes", get("num_classes")?)?,
    );
    config.conv = parse_list("conv", get("conv")?)?;
    config.kernel_len = parse_num("kernel_len", get("kernel_len")?)?;
    config.sensor_patch = parse_num("sensor_patch", get("sensor_patch")?)?;
    config.recurrent = parse_list("recurrent", get("recurrent")?)?;
    config.dense = parse_list("dense", get("dense")?)?;
    config.conv_bias = parse_num("conv_bias", get("conv_bias")?)?;
    config.seed = parse_num("seed", get("seed")?)?;
    for k in fields.keys() {
        const KNOWN: [&str; 11] = [
            "arch", "sensors", "window", "num_classes", "conv", "kernel_len",
            "sensor_patch", "recurrent", "dense", "conv_bias", "seed",
        ];
        if !KNOWN.contains(&k.as_str()) {
            return Err(bad(format!("unknown field {k}")));
        }
    }

    let mut model = Model::zeroed(config)?;
    let expected = model.params().len();
    if count != expected {
        return Err(bad(format!(
            "checkpoint lists {count} tensors, architecture has {expected}"
        )));
    }
    for p in model.params_mut() {
        let (n, line) = lines
            .next()
            .ok_or_else(|| bad(format!("truncated before tensor {}", p.name)))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "tensor" {
            return Err(bad(format!("line {n}: expected `tensor name rows cols`")));
        }
        if parts[1] != p.name {
            return Err(bad(format!(
                "line {n}: found tensor {}, expected {}",
                parts[1], p.name
            )));
        }
        let shape: (usize, usize) = (parse_num("rows", parts[2])?, parse_num("cols", parts[3])?);
        if shape != p.value.shape() {
            return Err(bad(format!(
                "shape mismatch for {}: file has {}x{}, architecture needs {}x{}",
                p.name,
                shape.0,
                shape.1,
                p.value.rows(),
                p.value.cols()
            )));
        }
        let mut data = Vec::with_capacity(shape.0 * shape.1);
        for _ in 0..shape.0 {
            let (n, row) = lines
                .next()
                .ok_or_else(|| bad(format!("truncated inside tensor {}", p.name)))?;
            let before = data.len();
            for tok in row.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|_| bad(format!("line {n}: bad value {tok:?}")))?,
                );
            }
            if data.len() - before != shape.1 {
                return Err(bad(format!(
                    "line {n}: {} values, expected {}",
                    data.len() - before,
                    shape.1
                )));
            }
        }
        p.value = Matrix::new(shape.0, shape.1, data)?;
    }
    match lines.next() {
        Some((_, "end")) => Ok((model, meta)),
        _ => Err(bad("truncated: missing end marker")),
    }
}

pub fn load_checkpoint_with(path: &Path) -> Result<(Model, Metadata)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    Ok(load_checkpoint_with(path)?.0)
}
