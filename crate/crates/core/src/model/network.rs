use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layers::{
    argmax_class, mse_loss, mse_softmax_backward, one_hot, softmax_rows, Conv1dLayer, ConvTrace,
    DenseLayer, GruLayer, GruTrace, LstmLayer, LstmTrace, PatchConvTrace, SensorPatchConv,
    SeqBatch,
};
use crate::model::{Arch, ModelConfig};
use crate::numerics::{Activation, Matrix, ParamTensor, Parameterized};

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Conv(Conv1dLayer),
    Patch(SensorPatchConv),
    Gru(GruLayer),
    Lstm(LstmLayer),
    LastStep,
    Flatten,
    Dense(DenseLayer, Activation),
}

enum Value {
    Seq(SeqBatch),
    Flat(Matrix),
}

#[derive(Debug, Clone)]
enum StageTrace {
    Conv(ConvTrace),
    Patch(PatchConvTrace),
    Gru(GruTrace),
    Lstm(LstmTrace),
    LastStep { steps: usize, width: usize },
    Flatten { steps: usize, width: usize },
    Dense { input: Matrix, output: Matrix },
}

/// Everything a backward pass needs, plus the batch outputs.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    stages: Vec<StageTrace>,
    /// `batch × classes` pre-softmax scores.
    pub logits: Matrix,
    /// Row-wise softmax of `logits`.
    pub probs: Matrix,
}

/// A classifier assembled from a [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    stages: Vec<Stage>,
}

impl Model {
    /// Builds the network and draws Glorot-uniform weights from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let mut model = Self::zeroed(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed);
        for stage in &mut model.stages {
            match stage {
                Stage::Conv(l) => l.init_glorot(&mut rng),
                Stage::Patch(l) => l.conv.init_glorot(&mut rng),
                Stage::Gru(l) => l.init_glorot(&mut rng),
                Stage::Lstm(l) => l.init_glorot(&mut rng),
                Stage::Dense(l, _) => l.init_glorot(&mut rng),
                Stage::LastStep | Stage::Flatten => {}
            }
        }
        Ok(model)
    }

    /// Builds the network with every parameter set to zero.
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let mut stages = Vec::new();
        // width of the running per-step feature vector, or of the flat vector
        let mut width = c.sensors;
        let mut flat;
        match c.arch {
            Arch::Hcg | Arch::Gru | Arch::Lstm => {
                if c.arch == Arch::Hcg {
                    for (i, &d) in c.conv.iter().enumerate() {
                        let name = format!("conv{i}");
                        stages.push(Stage::Conv(Conv1dLayer::new(
                            &name,
                            width,
                            d,
                            c.kernel_len,
                            c.conv_bias,
                        )?));
                        width = d;
                    }
                }
                for (i, &h) in c.recurrent.iter().enumerate() {
                    stages.push(if c.arch == Arch::Lstm {
                        Stage::Lstm(LstmLayer::new(&format!("lstm{i}"), width, h)?)
                    } else {
                        Stage::Gru(GruLayer::new(&format!("gru{i}"), width, h)?)
                    });
                    width = h;
                }
                stages.push(Stage::LastStep);
                flat = width;
            }
            Arch::Dnn => {
                stages.push(Stage::Flatten);
                flat = c.window * c.sensors;
            }
            Arch::Cnn => {
                let first = SensorPatchConv::new(
                    "conv0",
                    c.sensors,
                    c.sensor_patch,
                    c.conv[0],
                    c.kernel_len,
                    c.conv_bias,
                )?;
                width = first.out_width();
                stages.push(Stage::Patch(first));
                for (i, &d) in c.conv.iter().enumerate().skip(1) {
                    let name = format!("conv{i}");
                    stages.push(Stage::Conv(Conv1dLayer::new(
                        &name,
                        width,
                        d,
                        c.kernel_len,
                        c.conv_bias,
                    )?));
                    width = d;
                }
                stages.push(Stage::Flatten);
                flat = c.window * width;
            }
        }
        for (i, &d) in c.dense.iter().enumerate() {
            stages.push(Stage::Dense(
                DenseLayer::new(&format!("dense{i}"), flat, d)?,
                Activation::Relu,
            ));
            flat = d;
        }
        stages.push(Stage::Dense(
            DenseLayer::new("out", flat, c.num_classes)?,
            Activation::Identity,
        ));
        Ok(Self { config, stages })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn arch(&self) -> Arch {
        self.config.arch
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    /// Parameter lookup by name, e.g. `"gru0.w_r"`.
    pub fn param(&self, name: &str) -> Option<&ParamTensor> {
        self.params().into_iter().find(|p| p.name == name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut ParamTensor> {
        self.params_mut().into_iter().find(|p| p.name == name)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        let want = (self.config.window, self.config.sensors);
        if x.shape() != want {
            return Err(Error::dim(
                "model input",
                format!("{}x{} window", x.rows(), x.cols()),
                format!("expected {}x{} (steps x sensors)", want.0, want.1),
            ));
        }
        Ok(())
    }

    /// Batched forward pass over `T × N` windows.
    pub fn forward_batch(&self, xs: &[&Matrix]) -> Result<ForwardTrace> {
        if xs.is_empty() {
            return Err(Error::Validation("empty batch".into()));
        }
        for x in xs {
            self.check_input(x)?;
        }
        let mut value = Value::Seq(SeqBatch::from_samples(xs)?);
        let mut traces = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            let (next, trace) = match (stage, value) {
                (Stage::Conv(l), Value::Seq(x)) => {
                    let (y, t) = l.forward(&x)?;
                    (Value::Seq(y), StageTrace::Conv(t))
                }
                (Stage::Patch(l), Value::Seq(x)) => {
                    let (y, t) = l.forward(&x)?;
                    (Value::Seq(y), StageTrace::Patch(t))
                }
                (Stage::Gru(l), Value::Seq(x)) => {
                    let (y, t) = l.forward(&x, None)?;
                    (Value::Seq(y), StageTrace::Gru(t))
                }
                (Stage::Lstm(l), Value::Seq(x)) => {
                    let (y, t) = l.forward(&x, None)?;
                    (Value::Seq(y), StageTrace::Lstm(t))
                }
                (Stage::LastStep, Value::Seq(x)) => (
                    Value::Flat(x.last_step()),
                    StageTrace::LastStep {
                        steps: x.steps(),
                        width: x.width(),
                    },
                ),
                (Stage::Flatten, Value::Seq(x)) => (
                    Value::Flat(x.flatten()),
                    StageTrace::Flatten {
                        steps: x.steps(),
                        width: x.width(),
                    },
                ),
                (Stage::Dense(l, act), Value::Flat(x)) => {
                    let mut y = l.forward(&x)?;
                    if *act != Activation::Identity {
                        y = y.map(|v| act.apply(v));
                    }
                    (
                        Value::Flat(y.clone()),
                        StageTrace::Dense {
                            input: x,
                            output: y,
                        },
                    )
                }
                _ => unreachable!("stage list is built with matching value kinds"),
            };
            value = next;
            traces.push(trace);
        }
        let logits = match value {
            Value::Flat(m) => m,
            Value::Seq(_) => unreachable!("the network ends in a dense stage"),
        };
        let probs = softmax_rows(&logits);
        Ok(ForwardTrace {
            stages: traces,
            logits,
            probs,
        })
    }

    /// Class probabilities for one window.
    pub fn forward(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.forward_batch(&[x])?.probs.into_vec())
    }

    pub fn predict(&self, x: &Matrix) -> Result<usize> {
        argmax_class(&self.forward(x)?)
    }

    pub fn predict_batch(&self, xs: &[&Matrix]) -> Result<Vec<usize>> {
        let probs = self.forward_batch(xs)?.probs;
        (0..probs.rows()).map(|r| argmax_class(probs.row(r))).collect()
    }

    /// Parameter gradients (in `params()` order) given `∂L/∂logits`.
    pub fn backward(&self, trace: &ForwardTrace, dlogits: &Matrix) -> Result<Vec<Matrix>> {
        if dlogits.shape() != trace.logits.shape() {
            return Err(Error::dim(
                "model backward",
                format!("logits {}x{}", trace.logits.rows(), trace.logits.cols()),
                format!("gradient {}x{}", dlogits.rows(), dlogits.cols()),
            ));
        }
        let mut grad = Value::Flat(dlogits.clone());
        let mut per_stage: Vec<Vec<Matrix>> = Vec::with_capacity(self.stages.len());
        for (stage, st) in self.stages.iter().zip(&trace.stages).rev() {
            let (next, grads) = match (stage, st, grad) {
                (Stage::Dense(l, act), StageTrace::Dense { input, output }, Value::Flat(mut dy)) => {
                    if *act != Activation::Identity {
                        for (g, &y) in dy.as_mut_slice().iter_mut().zip(output.as_slice()) {
                            *g *= act.derivative_from_output(y);
                        }
                    }
                    let (dx, g) = l.backward(input, &dy)?;
                    (Value::Flat(dx), g)
                }
                (Stage::LastStep, StageTrace::LastStep { steps, width }, Value::Flat(dy)) => {
                    let mut dseq = SeqBatch::zeros(*steps, dy.rows(), *width);
                    dseq.step_mut(steps - 1).copy_from_slice(dy.as_slice());
                    (Value::Seq(dseq), Vec::new())
                }
                (Stage::Flatten, StageTrace::Flatten { steps, width }, Value::Flat(dy)) => {
                    (Value::Seq(SeqBatch::unflatten(&dy, *steps, *width)?), Vec::new())
                }
                (Stage::Gru(l), StageTrace::Gru(t), Value::Seq(dy)) => {
                    let (dx, g) = l.backward(t, &dy)?;
                    (Value::Seq(dx), g)
                }
                (Stage::Lstm(l), StageTrace::Lstm(t), Value::Seq(dy)) => {
                    let (dx, g) = l.backward(t, &dy)?;
                    (Value::Seq(dx), g)
                }
                (Stage::Conv(l), StageTrace::Conv(t), Value::Seq(dy)) => {
                    let (dx, g) = l.backward(t, &dy)?;
                    (Value::Seq(dx), g)
                }
                (Stage::Patch(l), StageTrace::Patch(t), Value::Seq(dy)) => {
                    let (dx, g) = l.backward(t, &dy)?;
                    (Value::Seq(dx), g)
                }
                _ => {
                    return Err(Error::Validation(
                        "forward trace does not belong to this model".into(),
                    ))
                }
            };
            grad = next;
            per_stage.push(grads);
        }
        Ok(per_stage.into_iter().rev().flatten().collect())
    }

    /// Summed squared error of the softmax outputs against one-hot `labels`,
    /// with its parameter gradients and the batch probabilities.
    pub fn loss_and_grads(
        &self,
        xs: &[&Matrix],
        labels: &[usize],
    ) -> Result<(f64, Vec<Matrix>, Matrix)> {
        let trace = self.forward_batch(xs)?;
        let target = one_hot(labels, self.config.num_classes)?;
        let loss = mse_loss(&trace.probs, &target)?;
        let dlogits = mse_softmax_backward(&trace.probs, &target)?;
        let grads = self.backward(&trace, &dlogits)?;
        Ok((loss, grads, trace.probs))
    }
}

impl Parameterized for Model {
    fn params(&self) -> Vec<&ParamTensor> {
        let mut out = Vec::new();
        for s in &self.stages {
            match s {
                Stage::Conv(l) => out.extend(l.params()),
                Stage::Patch(l) => out.extend(l.params()),
                Stage::Gru(l) => out.extend(l.params()),
                Stage::Lstm(l) => out.extend(l.params()),
                Stage::Dense(l, _) => out.extend(l.params()),
                Stage::LastStep | Stage::Flatten => {}
            }
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = Vec::new();
        for s in &mut self.stages {
            match s {
                Stage::Conv(l) => out.extend(l.params_mut()),
                Stage::Patch(l) => out.extend(l.params_mut()),
                Stage::Gru(l) => out.extend(l.params_mut()),
                Stage::Lstm(l) => out.extend(l.params_mut()),
                Stage::Dense(l, _) => out.extend(l.params_mut()),
                Stage::LastStep | Stage::Flatten => {}
            }
        }
        out
    }
}

/// Builds and initializes a model from its configuration.
pub fn build_model(config: ModelConfig) -> Result<Model> {
    Model::new(config)
}
