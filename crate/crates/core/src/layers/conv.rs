//! Sensor-wide causal 1-D convolution.
//!
//! Every kernel spans all input channels and `k` consecutive steps:
//! `out_t = ReLU(Σ_{j<k} f_j · x_{t−j} + bias)` with `x_{t<0} = 0`, so the
//! output has exactly as many steps as the input.

use rand::Rng;

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, SeqBatch};
use crate::numerics::{gemm_acc, gemm_tn_acc, transposed, Matrix, ParamTensor, Parameterized};

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dLayer {
    kernel_len: usize,
    in_width: usize,
    num_kernels: usize,
    /// `(k · in_width) × d`; row `j * in_width + c` holds tap `j`, channel `c`
    /// of every kernel.
    pub kernels: ParamTensor,
    pub bias: Option<ParamTensor>,
}

#[derive(Debug, Clone)]
pub struct ConvTrace {
    input: SeqBatch,
    output: SeqBatch,
}

impl Conv1dLayer {
    /// Zero-initialized layer.
    pub fn new(
        name: &str,
        in_width: usize,
        num_kernels: usize,
        kernel_len: usize,
        bias: bool,
    ) -> Result<Self> {
        if in_width == 0 || num_kernels == 0 || kernel_len == 0 {
            return Err(Error::Config(format!(
                "conv layer {name}: width {in_width}, kernels {num_kernels}, length {kernel_len} must all be >= 1"
            )));
        }
        Ok(Self {
            kernel_len,
            in_width,
            num_kernels,
            kernels: ParamTensor::zeros(
                format!("{name}.kernels"),
                kernel_len * in_width,
                num_kernels,
            ),
            bias: bias.then(|| ParamTensor::zeros(format!("{name}.bias"), 1, num_kernels)),
        })
    }

    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (rows, cols) = self.kernels.value.shape();
        self.kernels.value = glorot_uniform(
            rng,
            rows,
            cols,
            self.kernel_len * self.in_width,
            self.kernel_len * self.num_kernels,
        );
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel_len
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn num_kernels(&self) -> usize {
        self.num_kernels
    }

    /// Kernel `d` as an `in_width × k` matrix (column `j` is tap `f_j`).
    pub fn kernel(&self, d: usize) -> Matrix {
        let mut out = Matrix::zeros(self.in_width, self.kernel_len);
        for j in 0..self.kernel_len {
            for c in 0..self.in_width {
                out.set(c, j, self.kernels.value.get(j * self.in_width + c, d));
            }
        }
        out
    }

    pub fn set_kernel(&mut self, d: usize, f: &Matrix) -> Result<()> {
        if f.shape() != (self.in_width, self.kernel_len) {
            return Err(Error::dim(
                "Conv1dLayer::set_kernel",
                format!("{}x{}", self.in_width, self.kernel_len),
                format!("{}x{}", f.rows(), f.cols()),
            ));
        }
        for j in 0..self.kernel_len {
            for c in 0..self.in_width {
                self.kernels
                    .value
                    .set(j * self.in_width + c, d, f.get(c, j));
            }
        }
        Ok(())
    }

    fn tap(&self, j: usize) -> &[f64] {
        let n = self.in_width * self.num_kernels;
        &self.kernels.value.as_slice()[j * n..(j + 1) * n]
    }

    /// Convolution before the ReLU.
    pub fn pre_activation(&self, x: &SeqBatch) -> Result<SeqBatch> {
        if x.width() != self.in_width {
            return Err(Error::dim(
                "conv1d_forward",
                format!("{} input channels", x.width()),
                format!("kernel width {}", self.in_width),
            ));
        }
        let (steps, batch) = (x.steps(), x.batch());
        let d = self.num_kernels;
        let mut out = SeqBatch::zeros(steps, batch, d);
        if let Some(b) = &self.bias {
            out.data_mut().add_row_broadcast(b.value.as_slice());
        }
        for j in 0..self.kernel_len.min(steps) {
            let rows = (steps - j) * batch;
            gemm_acc(
                x.data().rows_slice(0, rows),
                self.tap(j),
                out.data_mut().rows_slice_mut(j * batch, steps * batch),
                rows,
                self.in_width,
                d,
            );
        }
        Ok(out)
    }

    pub fn forward(&self, x: &SeqBatch) -> Result<(SeqBatch, ConvTrace)> {
        let mut out = self.pre_activation(x)?;
        for v in out.data_mut().as_mut_slice() {
            if !(*v > 0.0) {
                *v = 0.0;
            }
        }
        let trace = ConvTrace {
            input: x.clone(),
            output: out.clone(),
        };
        Ok((out, trace))
    }

    /// Returns `(∂L/∂x, parameter gradients in `params()` order)`.
    pub fn backward(&self, trace: &ConvTrace, dy: &SeqBatch) -> Result<(SeqBatch, Vec<Matrix>)> {
        let x = &trace.input;
        if dy.data().shape() != trace.output.data().shape() {
            return Err(Error::dim(
                "conv1d backward",
                format!("{:?}", trace.output.data().shape()),
                format!("{:?}", dy.data().shape()),
            ));
        }
        let (steps, batch) = (x.steps(), x.batch());
        let (w, d) = (self.in_width, self.num_kernels);

        let mut dz = dy.data().clone();
        for (g, &y) in dz
            .as_mut_slice()
            .iter_mut()
            .zip(trace.output.data().as_slice())
        {
            if !(y > 0.0) {
                *g = 0.0;
            }
        }

        let mut dk = Matrix::zeros(self.kernel_len * w, d);
        let mut dx = SeqBatch::zeros(steps, batch, w);
        for j in 0..self.kernel_len.min(steps) {
            let rows = (steps - j) * batch;
            let dz_rows = dz.rows_slice(j * batch, steps * batch);
            gemm_tn_acc(
                x.data().rows_slice(0, rows),
                dz_rows,
                &mut dk.as_mut_slice()[j * w * d..(j + 1) * w * d],
                rows,
                w,
                d,
            );
            let tap_t = transposed(self.tap(j), w, d);
            gemm_acc(
                dz_rows,
                &tap_t,
                dx.data_mut().rows_slice_mut(0, rows),
                rows,
                d,
                w,
            );
        }

        let mut grads = vec![dk];
        if self.bias.is_some() {
            let mut db = Matrix::zeros(1, d);
            dz.column_sums_into(db.as_mut_slice());
            grads.push(db);
        }
        Ok((dx, grads))
    }
}

impl Parameterized for Conv1dLayer {
    fn params(&self) -> Vec<&ParamTensor> {
        std::iter::once(&self.kernels).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        std::iter::once(&mut self.kernels)
            .chain(self.bias.as_mut())
            .collect()
    }
}

/// Single-sample convenience: `T×N_in` in, `T×d` out.
pub fn conv1d_forward(x: &Matrix, layer: &Conv1dLayer) -> Result<Matrix> {
    let (out, _) = layer.forward(&SeqBatch::from_sample(x))?;
    Ok(out.into_data())
}

/// A convolution whose kernels cover `patch` adjacent sensors and `k` steps,
/// shared across every sensor position (stride 1, no padding across sensors).
///
/// Output channel `p * d + c` is kernel `c` applied at sensor offset `p`. This
/// realizes a small 2-D kernel with the 1-D engine by running one
/// [`Conv1dLayer`] over each sensor slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorPatchConv {
    sensors: usize,
    patch: usize,
    pub conv: Conv1dLayer,
}

#[derive(Debug, Clone)]
pub struct PatchConvTrace {
    patches: Vec<ConvTrace>,
}

impl SensorPatchConv {
    pub fn new(
        name: &str,
        sensors: usize,
        patch: usize,
        num_kernels: usize,
        kernel_len: usize,
        bias: bool,
    ) -> Result<Self> {
        if patch == 0 || patch > sensors {
            return Err(Error::Config(format!(
                "sensor patch {patch} must be in 1..={sensors}"
            )));
        }
        Ok(Self {
            sensors,
            patch,
            conv: Conv1dLayer::new(name, patch, num_kernels, kernel_len, bias)?,
        })
    }

    pub fn positions(&self) -> usize {
        self.sensors - self.patch + 1
    }

    pub fn out_width(&self) -> usize {
        self.positions() * self.conv.num_kernels()
    }

    pub fn forward(&self, x: &SeqBatch) -> Result<(SeqBatch, PatchConvTrace)> {
        if x.width() != self.sensors {
            return Err(Error::dim(
                "sensor patch conv",
                format!("{} input channels", x.width()),
                format!("{} sensors", self.sensors),
            ));
        }
        let d = self.conv.num_kernels();
        let mut out = Matrix::zeros(x.data().rows(), self.out_width());
        let mut patches = Vec::with_capacity(self.positions());
        for p in 0..self.positions() {
            let slice = SeqBatch::new(x.steps(), x.batch(), x.data().columns(p, self.patch))?;
            let (y, trace) = self.conv.forward(&slice)?;
            for r in 0..out.rows() {
                out.row_mut(r)[p * d..(p + 1) * d].copy_from_slice(y.data().row(r));
            }
            patches.push(trace);
        }
        Ok((
            SeqBatch::new(x.steps(), x.batch(), out)?,
            PatchConvTrace { patches },
        ))
    }

    pub fn backward(
        &self,
        trace: &PatchConvTrace,
        dy: &SeqBatch,
    ) -> Result<(SeqBatch, Vec<Matrix>)> {
        let d = self.conv.num_kernels();
        let mut dx = SeqBatch::zeros(dy.steps(), dy.batch(), self.sensors);
        let mut grads: Option<Vec<Matrix>> = None;
        for (p, pt) in trace.patches.iter().enumerate() {
            let dyp = SeqBatch::new(dy.steps(), dy.batch(), dy.data().columns(p * d, d))?;
            let (dxp, gp) = self.conv.backward(pt, &dyp)?;
            for r in 0..dx.data().rows() {
                let row = &mut dx.data_mut().row_mut(r)[p..p + self.patch];
                for (a, b) in row.iter_mut().zip(dxp.data().row(r)) {
                    *a += b;
                }
            }
            match grads.as_mut() {
                None => grads = Some(gp),
                Some(acc) => {
                    for (a, g) in acc.iter_mut().zip(&gp) {
                        a.add_assign(g)?;
                    }
                }
            }
        }
        Ok((dx, grads.unwrap_or_default()))
    }
}

impl Parameterized for SensorPatchConv {
    fn params(&self) -> Vec<&ParamTensor> {
        self.conv.params()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.conv.params_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn zero_input_zero_output() {
        let mut layer = Conv1dLayer::new("c", 3, 2, 4, true).unwrap();
        layer.kernels.value.fill(0.7);
        let y = conv1d_forward(&Matrix::zeros(5, 3), &layer).unwrap();
        assert_eq!(y, Matrix::zeros(5, 2));
    }

    #[test]
    fn identity_kernel_copies_first_sensor() {
        let mut layer = Conv1dLayer::new("c", 2, 1, 1, false).unwrap();
        layer
            .set_kernel(0, &Matrix::from_rows(&[[1.0], [0.0]]).unwrap())
            .unwrap();
        let x = seq(&[[1.5, 9.0], [-2.0, 3.0], [0.25, -1.0]]);
        let y = conv1d_forward(&x, &layer).unwrap();
        assert_eq!(y.as_slice(), &[1.5, 0.0, 0.25]);
    }

    #[test]
    fn shifted_tap_example() {
        // tests/oracles/fixtures.py: conv pre-activations
        let mut layer = Conv1dLayer::new("c", 2, 1, 2, false).unwrap();
        layer
            .set_kernel(0, &Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap())
            .unwrap();
        let x = seq(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let pre = layer.pre_activation(&SeqBatch::from_sample(&x)).unwrap();
        for (got, want) in pre.data().as_slice().iter().zip([1.0, 5.0, 9.0]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn channel_mismatch_is_dimension_error() {
        let layer = Conv1dLayer::new("c", 3, 1, 2, true).unwrap();
        assert!(matches!(
            conv1d_forward(&Matrix::zeros(4, 2), &layer),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rejects_zero_sizes() {
        assert!(Conv1dLayer::new("c", 2, 0, 2, true).is_err());
        assert!(Conv1dLayer::new("c", 2, 1, 0, true).is_err());
    }

    #[test]
    fn kernel_accessors_round_trip() {
        let mut layer = Conv1dLayer::new("c", 3, 2, 2, false).unwrap();
        let f = Matrix::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        layer.set_kernel(1, &f).unwrap();
        assert_eq!(layer.kernel(1), f);
        assert_eq!(layer.kernel(0), Matrix::zeros(3, 2));
    }

    #[test]
    fn batch_rows_match_single_sample() {
        let mut layer = Conv1dLayer::new("c", 2, 3, 3, true).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        layer.init_glorot(&mut rng);
        let a = seq(&[[1.0, -2.0], [0.5, 0.3], [2.0, 1.0], [-1.0, 0.1]]);
        let b = a.map(|v| v * 0.7 - 0.2);
        let (batched, _) = layer
            .forward(&SeqBatch::from_samples(&[&a, &b]).unwrap())
            .unwrap();
        assert_eq!(batched.sample(0), conv1d_forward(&a, &layer).unwrap());
        assert_eq!(batched.sample(1), conv1d_forward(&b, &layer).unwrap());
    }

    #[test]
    fn patch_conv_single_position_equals_plain_conv() {
        let mut pc = SensorPatchConv::new("p", 3, 3, 2, 2, true).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        pc.conv.init_glorot(&mut rng);
        let x = Matrix::new(4, 3, (0..12).map(|v| (v as f64).cos()).collect()).unwrap();
        let (y, _) = pc.forward(&SeqBatch::from_sample(&x)).unwrap();
        assert_eq!(y.into_data(), conv1d_forward(&x, &pc.conv).unwrap());
        assert_eq!(pc.positions(), 1);
    }

    proptest! {
        #[test]
        fn output_length_and_sign(steps in 1usize..=64, k in 1usize..=8, seed in 0u64..1000) {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let mut layer = Conv1dLayer::new("c", 2, 3, k, true).unwrap();
            layer.init_glorot(&mut rng);
            let x = crate::layers::glorot_uniform(&mut rng, steps, 2, 1, 1);
            let y = conv1d_forward(&x, &layer).unwrap();
            prop_assert_eq!(y.rows(), steps);
            prop_assert!(y.as_slice().iter().all(|&v| v >= 0.0));
        }
    }
}
