use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// One multi-sensor recording: `T × N` values, rows are time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRecording {
    pub values: Matrix,
    pub sample_rate_hz: Option<f64>,
    pub label: usize,
    /// File the values came from, or `"synthetic"`.
    pub source: String,
}

impl SensorRecording {
    pub fn new(values: Matrix, label: usize, source: impl Into<String>) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::Validation(format!(
                "recording must have at least one step and one sensor, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if !values.is_finite() {
            return Err(Error::Validation("recording contains non-finite values".into()));
        }
        Ok(Self {
            values,
            sample_rate_hz: None,
            label,
            source: source.into(),
        })
    }

    pub fn steps(&self) -> usize {
        self.values.rows()
    }

    pub fn sensors(&self) -> usize {
        self.values.cols()
    }
}

/// Reads a headerless numeric CSV, one row per time step and one column per
/// sensor. The label defaults to 0.
pub fn load_recording(path: &Path) -> Result<SensorRecording> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut width = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Ragged {
                path: path.to_path_buf(),
                row,
                expected,
                found: record.len(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Numeric {
                path: path.to_path_buf(),
                row,
                col: c + 1,
                cell: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Numeric {
                    path: path.to_path_buf(),
                    row,
                    col: c + 1,
                    cell: cell.to_string(),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            msg: "no data rows".into(),
        });
    }
    SensorRecording::new(Matrix::new(rows, cols, data)?, 0, path.display().to_string())
}

/// Writes values in the same format [`load_recording`] reads, with
/// shortest round-trip number formatting.
pub fn save_recording(values: &Matrix, path: &Path) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 20);
    for r in 0..values.rows() {
        for (c, v) in values.row(r).iter().enumerate() {
            if c > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(PathBuf::from(path), e))
}

/// Column `i` of the result is `series[i]`.
pub fn build_input_matrix(series: &[Vec<f64>]) -> Result<Matrix> {
    let first = series
        .first()
        .ok_or_else(|| Error::Validation("no sensor series given".into()))?;
    let t = first.len();
    if t == 0 {
        return Err(Error::Validation("sensor 0 has no samples".into()));
    }
    for (i, s) in series.iter().enumerate() {
        if s.len() != t {
            return Err(Error::Validation(format!(
                "sensor {i} has {} samples, sensor 0 has {t}",
                s.len()
            )));
        }
    }
    let n = series.len();
    let mut m = Matrix::zeros(t, n);
    for (i, s) in series.iter().enumerate() {
        for (step, &v) in s.iter().enumerate() {
            m.set(step, i, v);
        }
    }
    Ok(m)
}

/// Windows of `length` rows starting at `0, stride, 2·stride, …`; there are
/// `⌊(T − length) / stride⌋ + 1` of them. A window longer than the recording
/// yields none.
pub fn make_windows(rec: &SensorRecording, length: usize, stride: usize) -> Result<Vec<Matrix>> {
    if length == 0 || stride == 0 {
        return Err(Error::Config(format!(
            "window length ({length}) and stride ({stride}) must be >= 1"
        )));
    }
    let t = rec.steps();
    if length > t {
        log::warn!(
            "{}: window length {length} exceeds recording length {t}; no windows",
            rec.source
        );
        return Ok(Vec::new());
    }
    let n = rec.sensors();
    let count = (t - length) / stride + 1;
    Ok((0..count)
        .map(|w| {
            let start = w * stride;
            Matrix::new(
                length,
                n,
                rec.values.rows_slice(start, start + length).to_vec(),
            )
            .expect("window slice has length*n values")
        })
        .collect())
}
