use rand::Rng;

use crate::error::{Error, Result};
use crate::layers::glorot_uniform;
use crate::numerics::{gemm_acc, gemm_tn_acc, transposed, Matrix, ParamTensor, Parameterized};

/// Affine map `y = hᵀ W + b` with `W: in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: ParamTensor,
    pub b: ParamTensor,
}

impl DenseLayer {
    pub fn new(name: &str, inputs: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Config(format!(
                "dense layer {name}: {inputs} -> {outputs} must both be >= 1"
            )));
        }
        Ok(Self {
            w: ParamTensor::zeros(format!("{name}.w"), inputs, outputs),
            b: ParamTensor::zeros(format!("{name}.b"), 1, outputs),
        })
    }

    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (i, o) = self.w.value.shape();
        self.w.value = glorot_uniform(rng, i, o, i, o);
    }

    pub fn inputs(&self) -> usize {
        self.w.value.rows()
    }

    pub fn outputs(&self) -> usize {
        self.w.value.cols()
    }

    /// Batched forward, one sample per row.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let (i, o) = self.w.value.shape();
        if x.cols() != i {
            return Err(Error::dim(
                "dense_forward",
                format!("input width {}", x.cols()),
                format!("W rows {i}"),
            ));
        }
        let mut y = Matrix::zeros(x.rows(), o);
        y.add_row_broadcast(self.b.value.as_slice());
        gemm_acc(x.as_slice(), self.w.value.as_slice(), y.as_mut_slice(), x.rows(), i, o);
        Ok(y)
    }

    /// `(∂L/∂x, [∂L/∂W, ∂L/∂b])` given the layer input and `∂L/∂y`.
    pub fn backward(&self, x: &Matrix, dy: &Matrix) -> Result<(Matrix, Vec<Matrix>)> {
        let (i, o) = self.w.value.shape();
        if dy.cols() != o || dy.rows() != x.rows() {
            return Err(Error::dim(
                "dense backward",
                format!("{}x{o}", x.rows()),
                format!("{}x{}", dy.rows(), dy.cols()),
            ));
        }
        let mut dw = Matrix::zeros(i, o);
        gemm_tn_acc(x.as_slice(), dy.as_slice(), dw.as_mut_slice(), x.rows(), i, o);
        let mut db = Matrix::zeros(1, o);
        dy.column_sums_into(db.as_mut_slice());
        let mut dx = Matrix::zeros(x.rows(), i);
        let wt = transposed(self.w.value.as_slice(), i, o);
        gemm_acc(dy.as_slice(), &wt, dx.as_mut_slice(), x.rows(), o, i);
        Ok((dx, vec![dw, db]))
    }
}

impl Parameterized for DenseLayer {
    fn params(&self) -> Vec<&ParamTensor> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Single vector through the layer.
pub fn dense_forward(h: &[f64], layer: &DenseLayer) -> Result<Vec<f64>> {
    Ok(layer.forward(&Matrix::row_vector(h))?.into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let mut l = DenseLayer::new("d", 3, 3).unwrap();
        l.w.value = Matrix::identity(3);
        assert_eq!(dense_forward(&[1.0, -2.0, 0.5], &l).unwrap(), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut l = DenseLayer::new("d", 2, 2).unwrap();
        l.w.value.fill(3.0);
        l.b.value = Matrix::row_vector(&[0.25, -1.0]);
        assert_eq!(dense_forward(&[0.0, 0.0], &l).unwrap(), vec![0.25, -1.0]);
    }

    #[test]
    fn matvec_fixture() {
        // tests/oracles/fixtures.py: dense
        let mut l = DenseLayer::new("d", 2, 2).unwrap();
        l.w.value = Matrix::from_rows(&[[1.0, 3.0], [2.0, 4.0]]).unwrap();
        l.b.value = Matrix::row_vector(&[0.5, -0.5]);
        assert_eq!(dense_forward(&[1.0, 2.0], &l).unwrap(), vec![5.5, 10.5]);
    }

    #[test]
    fn wrong_input_length() {
        let l = DenseLayer::new("d", 2, 2).unwrap();
        assert!(dense_forward(&[1.0], &l).is_err());
    }

    #[test]
    fn param_count_with_bias() {
        let l = DenseLayer::new("d", 2, 3).unwrap();
        assert_eq!(l.param_count(), 9);
    }
}
