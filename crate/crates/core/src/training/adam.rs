use crate::error::{Error, Result};
use crate::numerics::{Matrix, Parameterized};
use crate::training::TrainConfig;

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub t: u64,
}

impl AdamState {
    pub fn new<P: Parameterized + ?Sized>(params: &P) -> Self {
        let zeros: Vec<Matrix> = params
            .params()
            .iter()
            .map(|p| Matrix::zeros(p.value.rows(), p.value.cols()))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update
/// `θ ← θ − lr · m̂ / (√v̂ + ε)` using `grads` in parameter order.
///
/// Every gradient is checked before anything is modified; a non-finite entry
/// aborts with the parameter's name.
pub fn adam_step<P: Parameterized + ?Sized>(
    params: &mut P,
    grads: &[Matrix],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    let mut tensors = params.params_mut();
    if tensors.len() != grads.len() || state.m.len() != grads.len() {
        return Err(Error::dim(
            "adam_step",
            format!("{} parameters", tensors.len()),
            format!("{} gradients, {} moments", grads.len(), state.m.len()),
        ));
    }
    for (p, g) in tensors.iter().zip(grads) {
        if p.value.shape() != g.shape() {
            return Err(Error::dim(
                "adam_step",
                format!("{} {}x{}", p.name, p.value.rows(), p.value.cols()),
                format!("gradient {}x{}", g.rows(), g.cols()),
            ));
        }
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
    }
    state.t += 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powf(state.t as f64);
    let c2 = 1.0 - b2.powf(state.t as f64);
    for ((p, g), (m, v)) in tensors
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        let values = p.value.as_mut_slice();
        for (((theta, &gi), mi), vi) in values
            .iter_mut()
            .zip(g.as_slice())
            .zip(m.as_mut_slice())
            .zip(v.as_mut_slice())
        {
            *mi = b1 * *mi + (1.0 - b1) * gi;
            *vi = b2 * *vi + (1.0 - b2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *theta -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ParamTensor;

    fn scalar(v: f64) -> Vec<ParamTensor> {
        vec![ParamTensor::new("theta", Matrix::row_vector(&[v]))]
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = scalar(0.7);
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &[Matrix::zeros(1, 1)], &mut st, &TrainConfig::default()).unwrap();
        assert_eq!(p[0].value.get(0, 0), 0.7);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![ParamTensor::new("w", Matrix::row_vector(&[1.0, -2.0, 3.0]))];
        let mut st = AdamState::new(&p);
        let g = Matrix::row_vector(&[0.5, -4.0, 1e3]);
        adam_step(&mut p, &[g], &mut st, &TrainConfig::default()).unwrap();
        let moved = [1.0 - 0.001, -2.0 + 0.001, 3.0 - 0.001];
        for (a, b) in p[0].value.as_slice().iter().zip(moved) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn two_steps_on_square() {
        // tests/oracles/fixtures.py: adam on f(θ) = θ², θ0 = 1
        let mut p = scalar(1.0);
        let mut st = AdamState::new(&p);
        let cfg = TrainConfig::default();
        let g = |p: &Vec<ParamTensor>| Matrix::row_vector(&[2.0 * p[0].value.get(0, 0)]);
        let g1 = g(&p);
        adam_step(&mut p, &[g1], &mut st, &cfg).unwrap();
        assert!((p[0].value.get(0, 0) - 0.999000000005).abs() < 1e-15);
        let g2 = g(&p);
        adam_step(&mut p, &[g2], &mut st, &cfg).unwrap();
        assert!((p[0].value.get(0, 0) - 0.9980000262138343).abs() < 1e-15);
        assert_eq!(st.t, 2);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut p = scalar(1.0);
        let mut st = AdamState::new(&p);
        let err = adam_step(
            &mut p,
            &[Matrix::row_vector(&[f64::NAN])],
            &mut st,
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(&err, Error::NonFiniteGradient(n) if n == "theta"));
        assert_eq!(p[0].value.get(0, 0), 1.0);
        assert_eq!(st.t, 0);
    }
}
