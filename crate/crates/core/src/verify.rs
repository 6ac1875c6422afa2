//! Finite-difference checks of every analytic gradient in the crate.
//!
//! Each check builds a small randomly initialized block, draws a random input
//! and a random linear read-out `L = Σ w ⊙ y` of its output, and compares the
//! backward pass against central differences for every parameter and every
//! input entry.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layers::{
    mse_loss, mse_softmax_backward, one_hot, softmax_rows, Conv1dLayer, DenseLayer, GruLayer,
    LstmLayer, SensorPatchConv, SeqBatch,
};
use crate::model::{Arch, Model, ModelConfig};
use crate::numerics::{
    finite_difference_gradient, max_relative_error, Matrix, ParamTensor, Parameterized,
};

pub use crate::numerics::gradcheck::{DEFAULT_STEP, DEFAULT_TOLERANCE};

/// Worst relative error of one check over all seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOutcome {
    pub name: &'static str,
    pub seeds: usize,
    pub max_rel_error: f64,
    /// Draws discarded because the oracle could not resolve them.
    pub redrawn: usize,
    pub elapsed: Duration,
}

impl GradCheckOutcome {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Smallest nonzero numeric gradient the oracle is trusted on. Central
/// differences at `h = 1e-5` carry roughly `1e-11 · |L|` of roundoff.
pub const RESOLUTION: f64 = 1e-6;

/// Largest disagreement between steps `h` and `h/2` before a draw is
/// treated as straddling a ReLU kink.
pub const KINK_TOLERANCE: f64 = 1e-3;

const MAX_DRAWS: usize = 100;

/// Numeric gradient at `DEFAULT_STEP`, or `None` when the draw is not
/// resolvable: some entry is nonzero but below [`RESOLUTION`], or halving
/// the step moves an entry by more than [`KINK_TOLERANCE`] (relative).
/// Only the oracle is consulted, never the analytic gradient.
fn oracle<P, F>(target: &mut P, mut loss: F) -> Result<Option<Vec<Matrix>>>
where
    P: Parameterized + ?Sized,
    F: FnMut(&P) -> f64,
{
    let numeric = finite_difference_gradient(target, &mut loss, DEFAULT_STEP)?;
    let half = finite_difference_gradient(target, &mut loss, DEFAULT_STEP / 2.0)?;
    let tiny = numeric
        .iter()
        .flat_map(|m| m.as_slice())
        .any(|&v| v != 0.0 && v.abs() < RESOLUTION);
    if tiny || max_relative_error(&numeric, &half)? > KINK_TOLERANCE {
        return Ok(None);
    }
    Ok(Some(numeric))
}

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .expect("sized")
}

fn randomize<P: Parameterized + ?Sized>(p: &mut P, rng: &mut ChaCha8Rng, scale: f64) {
    for t in p.params_mut() {
        for v in t.value.as_mut_slice() {
            *v = rng.gen_range(-scale..scale);
        }
    }
}

/// A block together with its input, so both are probed.
struct Probe<L> {
    layer: L,
    input: ParamTensor,
}

impl<L: Parameterized> Parameterized for Probe<L> {
    fn params(&self) -> Vec<&ParamTensor> {
        let mut v = self.layer.params();
        v.push(&self.input);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut v = self.layer.params_mut();
        v.push(&mut self.input);
        v
    }
}

fn dot(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Checks a sequence block `f(layer, x) -> y` with backward `b(layer, x, dy)`.
fn check_seq<L, F, B>(
    layer: L,
    steps: usize,
    batch: usize,
    in_width: usize,
    rng: &mut ChaCha8Rng,
    forward: F,
    backward: B,
) -> Result<Option<f64>>
where
    L: Parameterized,
    F: Fn(&L, &SeqBatch) -> Result<SeqBatch>,
    B: Fn(&L, &SeqBatch, &SeqBatch) -> Result<(SeqBatch, Vec<Matrix>)>,
{
    let x = random(rng, steps * batch, in_width);
    let y = forward(&layer, &SeqBatch::new(steps, batch, x.clone())?)?;
    let w = random(rng, y.data().rows(), y.width());
    let mut probe = Probe {
        layer,
        input: ParamTensor::new("input", x),
    };
    let as_seq = |p: &Probe<L>| SeqBatch::new(steps, batch, p.input.value.clone()).expect("sized");
    let loss = |p: &Probe<L>| dot(forward(&p.layer, &as_seq(p)).expect("forward").data(), &w);
    let Some(numeric) = oracle(&mut probe, loss)? else {
        return Ok(None);
    };
    let upstream = SeqBatch::new(steps, batch, w.clone())?;
    let (dx, mut analytic) = backward(&probe.layer, &as_seq(&probe), &upstream)?;
    analytic.push(dx.into_data());
    max_relative_error(&analytic, &numeric).map(Some)
}

fn conv_check(rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let k = rng.gen_range(1..5);
    let mut l = Conv1dLayer::new("conv", 3, 2, k, true)?;
    randomize(&mut l, rng, 1.0);
    check_seq(
        l,
        7,
        2,
        3,
        rng,
        |l, x| Ok(l.forward(x)?.0),
        |l, x, dy| {
            let (_, t) = l.forward(x)?;
            l.backward(&t, dy)
        },
    )
}

fn patch_conv_check(rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let mut l = SensorPatchConv::new("pconv", 4, 2, 2, 3, true)?;
    randomize(&mut l, rng, 1.0);
    check_seq(
        l,
        6,
        2,
        4,
        rng,
        |l, x| Ok(l.forward(x)?.0),
        |l, x, dy| {
            let (_, t) = l.forward(x)?;
            l.backward(&t, dy)
        },
    )
}

fn gru_check(rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let mut l = GruLayer::new("gru", 3, 4)?;
    randomize(&mut l, rng, 0.8);
    check_seq(
        l,
        8,
        2,
        3,
        rng,
        |l, x| Ok(l.forward(x, None)?.0),
        |l, x, dy| {
            let (_, t) = l.forward(x, None)?;
            l.backward(&t, dy)
        },
    )
}

fn lstm_check(rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let mut l = LstmLayer::new("lstm", 3, 4)?;
    randomize(&mut l, rng, 0.8);
    check_seq(
        l,
        8,
        2,
        3,
        rng,
        |l, x| Ok(l.forward(x, None)?.0),
        |l, x, dy| {
            let (_, t) = l.forward(x, None)?;
            l.backward(&t, dy)
        },
    )
}

fn dense_check(rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let mut l = DenseLayer::new("dense", 5, 3)?;
    randomize(&mut l, rng, 1.0);
    let x = random(rng, 4, 5);
    let w = random(rng, 4, 3);
    let mut probe = Probe {
        layer: l,
        input: ParamTensor::new("input", x),
    };
    let loss = |p: &Probe<DenseLayer>| dot(&p.layer.forward(&p.input.value).expect("forward"), &w);
    let Some(numeric) = oracle(&mut probe, loss)? else {
        return Ok(None);
    };
    let (dx, mut analytic) = probe.layer.backward(&probe.input.value, &w)?;
    analytic.push(dx);
    max_relative_error(&analytic, &numeric).map(Some)
}

fn softmax_mse_check(rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let classes = 4;
    let labels: Vec<usize> = (0..3).map(|_| rng.gen_range(0..classes)).collect();
    let target = one_hot(&labels, classes)?;
    let mut logits = vec![ParamTensor::new("logits", random(rng, 3, classes).map(|v| 2.0 * v))];
    let loss = |p: &Vec<ParamTensor>| mse_loss(&softmax_rows(&p[0].value), &target).expect("loss");
    let Some(numeric) = oracle(&mut logits, loss)? else {
        return Ok(None);
    };
    let analytic = mse_softmax_backward(&softmax_rows(&logits[0].value), &target)?;
    max_relative_error(&[analytic], &numeric).map(Some)
}

/// Whole-model check on the real objective (softmax + summed squared error).
/// Only HCG carries a dense head here; the baselines keep their own layout.
fn model_check(arch: Arch, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let mut cfg = ModelConfig::with_layers(arch, 2, 8, 3, &[3, 2])?;
    cfg.kernel_len = 3;
    cfg.sensor_patch = 2;
    if arch == Arch::Hcg {
        cfg.dense = vec![4];
    }
    cfg.seed = rng.gen();
    let mut model = Model::new(cfg)?;
    randomize(&mut model, rng, 0.8);
    let xs: Vec<Matrix> = (0..2).map(|_| random(rng, 8, 2)).collect();
    let refs: Vec<&Matrix> = xs.iter().collect();
    let labels: Vec<usize> = (0..2).map(|_| rng.gen_range(0..3)).collect();
    let loss = |m: &Model| m.loss_and_grads(&refs, &labels).expect("loss").0;
    let Some(numeric) = oracle(&mut model, loss)? else {
        return Ok(None);
    };
    let (_, analytic, _) = model.loss_and_grads(&refs, &labels)?;
    max_relative_error(&analytic, &numeric).map(Some)
}

/// Draws one instance from the rng; `None` means the draw was not resolvable.
type CheckFn = fn(&mut ChaCha8Rng) -> Result<Option<f64>>;

/// Every check in the suite, by name.
pub fn checks() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("conv1d", conv_check as CheckFn),
        ("conv1d (sensor patch)", patch_conv_check),
        ("gru (bptt, T=8)", gru_check),
        ("lstm (bptt, T=8)", lstm_check),
        ("dense", dense_check),
        ("softmax + mse", softmax_mse_check),
        ("model: hcg", |r| model_check(Arch::Hcg, r)),
        ("model: dnn", |r| model_check(Arch::Dnn, r)),
        ("model: cnn", |r| model_check(Arch::Cnn, r)),
        ("model: lstm", |r| model_check(Arch::Lstm, r)),
        ("model: gru", |r| model_check(Arch::Gru, r)),
    ]
}

/// Runs every check for seeds `base_seed .. base_seed + seeds`. Each seed
/// owns one rng; unresolvable draws are replaced by the next draw from it.
pub fn gradient_suite(base_seed: u64, seeds: usize) -> Result<Vec<GradCheckOutcome>> {
    checks()
        .into_iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let mut worst = 0.0f64;
            let mut redrawn = 0;
            for s in 0..seeds as u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(s));
                let err = loop {
                    if let Some(e) = check(&mut rng)? {
                        break e;
                    }
                    redrawn += 1;
                    if redrawn >= MAX_DRAWS * seeds.max(1) {
                        return Err(Error::Validation(format!(
                            "gradient check {name}: no resolvable instance after {redrawn} draws"
                        )));
                    }
                };
                worst = worst.max(err);
            }
            Ok(GradCheckOutcome {
                name,
                seeds,
                max_rel_error: worst,
                redrawn,
                elapsed: start.elapsed(),
            })
        })
        .collect()
}
