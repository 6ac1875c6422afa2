use crate::numerics::Matrix;

/// A named trainable tensor together with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self::new(name, Matrix::zeros(rows, cols))
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Anything that owns an ordered list of trainable tensors.
///
/// The order returned by [`params`](Parameterized::params) is the order every
/// gradient list in this crate follows.
pub trait Parameterized {
    fn params(&self) -> Vec<&ParamTensor>;
    fn params_mut(&mut self) -> Vec<&mut ParamTensor>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Adds `grads` (in parameter order) into each tensor's `grad`.
    fn accumulate_grads(&mut self, grads: &[Matrix]) -> crate::Result<()> {
        let params = self.params_mut();
        if params.len() != grads.len() {
            return Err(crate::Error::dim(
                "accumulate_grads",
                format!("{} parameters", params.len()),
                format!("{} gradients", grads.len()),
            ));
        }
        for (p, g) in params.into_iter().zip(grads) {
            p.grad.add_assign(g)?;
        }
        Ok(())
    }
}

impl Parameterized for Vec<ParamTensor> {
    fn params(&self) -> Vec<&ParamTensor> {
        self.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.iter_mut().collect()
    }
}
