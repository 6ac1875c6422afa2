use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// A batch of equally long sequences stored time-major: row `t * batch + b`
/// holds sample `b` at step `t`.
///
/// Time-major layout keeps every step a contiguous `batch × width` block, and a
/// shift by `j` steps is a contiguous block of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqBatch {
    steps: usize,
    batch: usize,
    data: Matrix,
}

impl SeqBatch {
    pub fn new(steps: usize, batch: usize, data: Matrix) -> Result<Self> {
        if data.rows() != steps * batch {
            return Err(Error::dim(
                "SeqBatch::new",
                format!("{steps} steps x {batch} samples"),
                format!("{} rows", data.rows()),
            ));
        }
        Ok(Self { steps, batch, data })
    }

    pub fn zeros(steps: usize, batch: usize, width: usize) -> Self {
        Self {
            steps,
            batch,
            data: Matrix::zeros(steps * batch, width),
        }
    }

    /// Single `T×C` sample as a batch of one.
    pub fn from_sample(x: &Matrix) -> Self {
        Self {
            steps: x.rows(),
            batch: 1,
            data: x.clone(),
        }
    }

    /// Interleaves `T×C` samples into time-major order.
    pub fn from_samples(samples: &[&Matrix]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Validation("empty batch".into()))?;
        let (steps, width) = first.shape();
        let batch = samples.len();
        let mut data = Matrix::zeros(steps * batch, width);
        for (b, s) in samples.iter().enumerate() {
            if s.shape() != (steps, width) {
                return Err(Error::dim(
                    "SeqBatch::from_samples",
                    format!("{steps}x{width}"),
                    format!("sample {b} is {}x{}", s.rows(), s.cols()),
                ));
            }
            for t in 0..steps {
                data.row_mut(t * batch + b).copy_from_slice(s.row(t));
            }
        }
        Ok(Self { steps, batch, data })
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn batch(&self) -> usize {
        self.batch
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.data.cols()
    }

    #[inline]
    pub fn data(&self) -> &Matrix {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut Matrix {
        &mut self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }

    /// The `batch × width` block for step `t`.
    #[inline]
    pub fn step(&self, t: usize) -> &[f64] {
        self.data.rows_slice(t * self.batch, (t + 1) * self.batch)
    }

    #[inline]
    pub fn step_mut(&mut self, t: usize) -> &mut [f64] {
        self.data
            .rows_slice_mut(t * self.batch, (t + 1) * self.batch)
    }

    /// Extracts sample `b` as a `T×C` matrix.
    pub fn sample(&self, b: usize) -> Matrix {
        let mut out = Matrix::zeros(self.steps, self.width());
        for t in 0..self.steps {
            out.row_mut(t)
                .copy_from_slice(self.data.row(t * self.batch + b));
        }
        out
    }

    /// `batch × width` matrix of the final step.
    pub fn last_step(&self) -> Matrix {
        let w = self.width();
        Matrix::new(self.batch, w, self.step(self.steps - 1).to_vec())
            .expect("step block has batch*width values")
    }

    /// Flattens each sample to one row, feature index `t * width + c`.
    pub fn flatten(&self) -> Matrix {
        let w = self.width();
        let mut out = Matrix::zeros(self.batch, self.steps * w);
        for t in 0..self.steps {
            for b in 0..self.batch {
                out.row_mut(b)[t * w..(t + 1) * w]
                    .copy_from_slice(self.data.row(t * self.batch + b));
            }
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(flat: &Matrix, steps: usize, width: usize) -> Result<Self> {
        if flat.cols() != steps * width {
            return Err(Error::dim(
                "SeqBatch::unflatten",
                format!("{steps}x{width}"),
                format!("{} features", flat.cols()),
            ));
        }
        let batch = flat.rows();
        let mut out = Self::zeros(steps, batch, width);
        for t in 0..steps {
            for b in 0..batch {
                out.data
                    .row_mut(t * batch + b)
                    .copy_from_slice(&flat.row(b)[t * width..(t + 1) * width]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleave_and_extract() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let b = a.map(|v| -v);
        let seq = SeqBatch::from_samples(&[&a, &b]).unwrap();
        assert_eq!(seq.step(1), &[3.0, 4.0, -3.0, -4.0]);
        assert_eq!(seq.sample(0), a);
        assert_eq!(seq.sample(1), b);
        assert_eq!(seq.last_step().as_slice(), &[5.0, 6.0, -5.0, -6.0]);
    }

    #[test]
    fn flatten_round_trip() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let seq = SeqBatch::from_samples(&[&a, &a]).unwrap();
        let flat = seq.flatten();
        assert_eq!(flat.row(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(SeqBatch::unflatten(&flat, 2, 2).unwrap(), seq);
    }

    #[test]
    fn ragged_batch_rejected() {
        let a = Matrix::zeros(3, 2);
        let b = Matrix::zeros(4, 2);
        assert!(SeqBatch::from_samples(&[&a, &b]).is_err());
    }
}
