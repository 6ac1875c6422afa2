//! Softmax output, class decision and the summed squared-error objective.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// `d_i = e^{y_i} / Σ_j e^{y_j}`, shifted by the maximum logit.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        out.row_mut(r).copy_from_slice(&softmax(logits.row(r)));
    }
    out
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_class(d: &[f64]) -> Result<usize> {
    if d.is_empty() {
        return Err(Error::Validation("argmax of an empty vector".into()));
    }
    let mut best = 0;
    for (i, &v) in d.iter().enumerate().skip(1) {
        if v > d[best] {
            best = i;
        }
    }
    Ok(best)
}

/// One-hot rows for `labels` over `num_classes`.
pub fn one_hot(labels: &[usize], num_classes: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(labels.len(), num_classes);
    for (r, &l) in labels.iter().enumerate() {
        if l >= num_classes {
            return Err(Error::Validation(format!(
                "label {l} out of range for {num_classes} classes"
            )));
        }
        m.set(r, l, 1.0);
    }
    Ok(m)
}

fn check_pair(pred: &Matrix, target: &Matrix) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::dim(
            "mse_loss",
            format!("prediction {}x{}", pred.rows(), pred.cols()),
            format!("target {}x{}", target.rows(), target.cols()),
        ));
    }
    for r in 0..target.rows() {
        let row = target.row(r);
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || zeros != row.len() - 1 {
            return Err(Error::Validation(format!("target row {r} is not one-hot")));
        }
    }
    Ok(())
}

/// Sum over samples and classes of `(d − d̂)²` (a sum, not a mean).
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<f64> {
    check_pair(pred, target)?;
    Ok(pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum())
}

/// Gradient of [`mse_loss`] with respect to the pre-softmax logits, through
/// the softmax Jacobian: `∂L/∂y_i = d_i (g_i − Σ_j g_j d_j)` with
/// `g = 2 (d − d̂)`.
pub fn mse_softmax_backward(probs: &Matrix, target: &Matrix) -> Result<Matrix> {
    check_pair(probs, target)?;
    let mut out = Matrix::zeros(probs.rows(), probs.cols());
    for r in 0..probs.rows() {
        let d = probs.row(r);
        let t = target.row(r);
        let g: Vec<f64> = d.iter().zip(t).map(|(p, q)| 2.0 * (p - q)).collect();
        let dot: f64 = g.iter().zip(d).map(|(a, b)| a * b).sum();
        for (o, (gi, di)) in out.row_mut(r).iter_mut().zip(g.iter().zip(d)) {
            *o = di * (gi - dot);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_for_equal_logits() {
        let d = softmax(&[0.3; 5]);
        assert!(d.iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn ln2_logits() {
        // tests/oracles/fixtures.py: softmax(0, ln 2)
        let d = softmax(&[0.0, 2.0f64.ln()]);
        assert!((d[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn argmax_cases() {
        assert_eq!(argmax_class(&[0.1, 0.7, 0.2]).unwrap(), 1);
        assert_eq!(argmax_class(&[0.5, 0.5]).unwrap(), 0);
        for i in 0..4 {
            let mut e = vec![0.0; 4];
            e[i] = 1.0;
            assert_eq!(argmax_class(&e).unwrap(), i);
        }
        assert!(argmax_class(&[]).is_err());
    }

    #[test]
    fn mse_examples() {
        let t = one_hot(&[0], 4).unwrap();
        assert_eq!(mse_loss(&t, &t).unwrap(), 0.0);
        let uniform = Matrix::filled(1, 4, 0.25);
        assert!((mse_loss(&uniform, &t).unwrap() - 0.75).abs() < 1e-15);

        let t2 = one_hot(&[0, 0], 4).unwrap();
        let u2 = Matrix::filled(2, 4, 0.25);
        assert_eq!(mse_loss(&u2, &t2).unwrap(), 2.0 * mse_loss(&uniform, &t).unwrap());
    }

    #[test]
    fn mse_rejects_bad_targets() {
        let p = Matrix::filled(1, 3, 1.0 / 3.0);
        let not_one_hot = Matrix::from_rows(&[[0.5, 0.5, 0.0]]).unwrap();
        assert!(matches!(mse_loss(&p, &not_one_hot), Err(Error::Validation(_))));
        assert!(matches!(
            mse_loss(&p, &one_hot(&[1], 4).unwrap()),
            Err(Error::Dimension { .. })
        ));
        assert!(one_hot(&[4], 4).is_err());
    }

    proptest! {
        #[test]
        // spreads beyond ~36 round the top probability to exactly 1.0 in f64
        fn softmax_is_a_distribution(logits in proptest::collection::vec(-10.0f64..10.0, 1..10)) {
            let d = softmax(&logits);
            let sum: f64 = d.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(d.len() == 1 || d.iter().all(|&v| v > 0.0 && v < 1.0));
            let top = argmax_class(&logits).unwrap();
            prop_assert_eq!(argmax_class(&d).unwrap(), top);
        }

        #[test]
        fn softmax_shift_invariant(logits in proptest::collection::vec(-20.0f64..20.0, 1..8), c in -50.0f64..50.0) {
            let shifted: Vec<f64> = logits.iter().map(|v| v + c).collect();
            for (a, b) in softmax(&logits).iter().zip(softmax(&shifted)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn mse_nonnegative_and_zero_only_at_target(
            logits in proptest::collection::vec(-5.0f64..5.0, 4), label in 0usize..4
        ) {
            let pred = Matrix::row_vector(&softmax(&logits));
            let t = one_hot(&[label], 4).unwrap();
            let l = mse_loss(&pred, &t).unwrap();
            prop_assert!(l > 0.0);
            prop_assert_eq!(mse_loss(&t, &t).unwrap(), 0.0);
        }
    }
}
