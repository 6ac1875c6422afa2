//! Central-difference gradient oracle.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Parameterized};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Numerical gradient of `loss_fn` with respect to every scalar parameter of
/// `target`, by `(L(θ+h) − L(θ−h)) / 2h`.
///
/// Each probed entry is written back to its exact original bits before the
/// next one is touched.
pub fn finite_difference_gradient<T, F>(target: &mut T, mut loss_fn: F, h: f64) -> Result<Vec<Matrix>>
where
    T: Parameterized + ?Sized,
    F: FnMut(&T) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be > 0, got {h}")));
    }
    let shapes: Vec<(usize, usize)> = target.params().iter().map(|p| p.value.shape()).collect();
    let mut grads: Vec<Matrix> = shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect();

    for (pi, grad) in grads.iter_mut().enumerate() {
        for i in 0..grad.len() {
            let original = target.params()[pi].value.as_slice()[i];

            target.params_mut()[pi].value.as_mut_slice()[i] = original + h;
            let plus = loss_fn(target);
            target.params_mut()[pi].value.as_mut_slice()[i] = original - h;
            let minus = loss_fn(target);
            target.params_mut()[pi].value.as_mut_slice()[i] = original;

            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Oracle {
                    param: target.params()[pi].name.clone(),
                    index: i,
                });
            }
            grad.as_mut_slice()[i] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(grads)
}

/// `|a − b| / max(|a|, |b|, 1e-8)`.
#[inline]
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest elementwise relative error across two gradient lists.
pub fn max_relative_error(analytic: &[Matrix], numeric: &[Matrix]) -> Result<f64> {
    if analytic.len() != numeric.len() {
        return Err(Error::dim(
            "max_relative_error",
            format!("{} tensors", analytic.len()),
            format!("{} tensors", numeric.len()),
        ));
    }
    let mut worst = 0.0f64;
    for (a, n) in analytic.iter().zip(numeric) {
        if a.shape() != n.shape() {
            return Err(Error::dim(
                "max_relative_error",
                format!("{:?}", a.shape()),
                format!("{:?}", n.shape()),
            ));
        }
        for (&x, &y) in a.as_slice().iter().zip(n.as_slice()) {
            worst = worst.max(relative_error(x, y));
        }
    }
    Ok(worst)
}
