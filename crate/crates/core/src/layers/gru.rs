//! Gated recurrent unit with the gate convention
//!
//! ```text
//! r = σ(Θ_r [y, h] + b_r)
//! u = σ(Θ_u [y, h] + b_u)
//! c = tanh(Θ_c [y, r ⊙ h] + b_c)
//! h' = u ⊙ h + (1 − u) ⊙ c
//! ```
//!
//! i.e. the update gate `u` keeps the *old* state. Each `Θ` is stored as an
//! `(input + hidden) × hidden` block so that `[y, h] · Θ` is a row-vector
//! product; rows `0..input` act on `y`, the rest on the recurrent part.

use rand::Rng;

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, SeqBatch};
use crate::numerics::{
    gemm_acc, gemm_tn_acc, sigmoid, transposed, Matrix, ParamTensor, Parameterized,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer {
    input_size: usize,
    hidden_size: usize,
    pub w_r: ParamTensor,
    pub b_r: ParamTensor,
    pub w_u: ParamTensor,
    pub b_u: ParamTensor,
    pub w_c: ParamTensor,
    pub b_c: ParamTensor,
}

/// Gate values of one cell application.
#[derive(Debug, Clone, PartialEq)]
pub struct GateTrace {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub c: Vec<f64>,
}

/// Everything backward-through-time needs, each stored `(T·B) × H`
/// time-major like the input.
#[derive(Debug, Clone)]
pub struct GruTrace {
    input: SeqBatch,
    h_prev: Matrix,
    r: Matrix,
    u: Matrix,
    c: Matrix,
    rh: Matrix,
}

impl GruTrace {
    pub fn steps(&self) -> usize {
        self.input.steps()
    }

    pub fn gates(&self) -> (&Matrix, &Matrix, &Matrix) {
        (&self.r, &self.u, &self.c)
    }
}

impl GruLayer {
    pub fn new(name: &str, input_size: usize, hidden_size: usize) -> Result<Self> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::Config(format!(
                "gru layer {name}: input {input_size} and hidden {hidden_size} must be >= 1"
            )));
        }
        let rows = input_size + hidden_size;
        let w = |g: &str| ParamTensor::zeros(format!("{name}.w_{g}"), rows, hidden_size);
        let b = |g: &str| ParamTensor::zeros(format!("{name}.b_{g}"), 1, hidden_size);
        Ok(Self {
            input_size,
            hidden_size,
            w_r: w("r"),
            b_r: b("r"),
            w_u: w("u"),
            b_u: b("u"),
            w_c: w("c"),
            b_c: b("c"),
        })
    }

    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (rows, h) = (self.input_size + self.hidden_size, self.hidden_size);
        for w in [&mut self.w_r, &mut self.w_u, &mut self.w_c] {
            w.value = glorot_uniform(rng, rows, h, rows, h);
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    fn input_part(w: &ParamTensor, input: usize, hidden: usize) -> &[f64] {
        &w.value.as_slice()[..input * hidden]
    }

    fn hidden_part(w: &ParamTensor, input: usize, hidden: usize) -> &[f64] {
        &w.value.as_slice()[input * hidden..]
    }

    /// Runs the cell over every step and returns all hidden states `h_1..h_T`.
    /// `h0` defaults to zeros.
    pub fn forward(&self, x: &SeqBatch, h0: Option<&Matrix>) -> Result<(SeqBatch, GruTrace)> {
        let (inp, hid) = (self.input_size, self.hidden_size);
        if x.width() != inp {
            return Err(Error::dim(
                "gru forward",
                format!("input width {}", x.width()),
                format!("layer input size {inp}"),
            ));
        }
        let (steps, batch) = (x.steps(), x.batch());
        let n = steps * batch;
        let mut h = match h0 {
            Some(m) if m.shape() == (batch, hid) => m.as_slice().to_vec(),
            Some(m) => {
                return Err(Error::dim(
                    "gru initial state",
                    format!("{batch}x{hid}"),
                    format!("{}x{}", m.rows(), m.cols()),
                ))
            }
            None => vec![0.0; batch * hid],
        };

        // input projections for all steps at once
        let project = |w: &ParamTensor, b: &ParamTensor| {
            let mut a = Matrix::zeros(n, hid);
            a.add_row_broadcast(b.value.as_slice());
            gemm_acc(
                x.data().as_slice(),
                Self::input_part(w, inp, hid),
                a.as_mut_slice(),
                n,
                inp,
                hid,
            );
            a
        };
        let mut r = project(&self.w_r, &self.b_r);
        let mut u = project(&self.w_u, &self.b_u);
        let mut c = project(&self.w_c, &self.b_c);
        let mut h_prev = Matrix::zeros(n, hid);
        let mut rh = Matrix::zeros(n, hid);
        let mut out = SeqBatch::zeros(steps, batch, hid);

        let wr_h = Self::hidden_part(&self.w_r, inp, hid);
        let wu_h = Self::hidden_part(&self.w_u, inp, hid);
        let wc_h = Self::hidden_part(&self.w_c, inp, hid);

        for t in 0..steps {
            let (lo, hi) = (t * batch, (t + 1) * batch);
            h_prev.rows_slice_mut(lo, hi).copy_from_slice(&h);

            let r_t = r.rows_slice_mut(lo, hi);
            gemm_acc(&h, wr_h, r_t, batch, hid, hid);
            r_t.iter_mut().for_each(|v| *v = sigmoid(*v));

            let u_t = u.rows_slice_mut(lo, hi);
            gemm_acc(&h, wu_h, u_t, batch, hid, hid);
            u_t.iter_mut().for_each(|v| *v = sigmoid(*v));

            let rh_t = rh.rows_slice_mut(lo, hi);
            for ((o, &rv), &hv) in rh_t.iter_mut().zip(r.rows_slice(lo, hi)).zip(&h) {
                *o = rv * hv;
            }

            let c_t = c.rows_slice_mut(lo, hi);
            gemm_acc(rh.rows_slice(lo, hi), wc_h, c_t, batch, hid, hid);
            c_t.iter_mut().for_each(|v| *v = v.tanh());

            let u_t = u.rows_slice(lo, hi);
            let c_t = c.rows_slice(lo, hi);
            for ((hv, &uv), &cv) in h.iter_mut().zip(u_t).zip(c_t) {
                *hv = uv * *hv + (1.0 - uv) * cv;
            }
            out.step_mut(t).copy_from_slice(&h);
        }

        let trace = GruTrace {
            input: x.clone(),
            h_prev,
            r,
            u,
            c,
            rh,
        };
        Ok((out, trace))
    }

    /// Backpropagation through the whole sequence. `dh` holds `∂L/∂h_t` for
    /// every output step (zeros where a step is unused).
    pub fn backward(&self, trace: &GruTrace, dh: &SeqBatch) -> Result<(SeqBatch, Vec<Matrix>)> {
        let (inp, hid) = (self.input_size, self.hidden_size);
        let x = &trace.input;
        let (steps, batch) = (x.steps(), x.batch());
        if dh.steps() != steps || dh.batch() != batch || dh.width() != hid {
            return Err(Error::dim(
                "gru backward",
                format!("{steps} steps x {batch} x {hid}"),
                format!("{} steps x {} x {}", dh.steps(), dh.batch(), dh.width()),
            ));
        }
        let n = steps * batch;
        let wr_ht = transposed(Self::hidden_part(&self.w_r, inp, hid), hid, hid);
        let wu_ht = transposed(Self::hidden_part(&self.w_u, inp, hid), hid, hid);
        let wc_ht = transposed(Self::hidden_part(&self.w_c, inp, hid), hid, hid);

        let mut da_r = Matrix::zeros(n, hid);
        let mut da_u = Matrix::zeros(n, hid);
        let mut da_c = Matrix::zeros(n, hid);
        let mut carry = vec![0.0; batch * hid];
        let mut g = vec![0.0; batch * hid];
        let mut drh = vec![0.0; batch * hid];

        for t in (0..steps).rev() {
            let (lo, hi) = (t * batch, (t + 1) * batch);
            for ((gv, &d), &cv) in g.iter_mut().zip(dh.step(t)).zip(&carry) {
                *gv = d + cv;
            }
            let r = trace.r.rows_slice(lo, hi);
            let u = trace.u.rows_slice(lo, hi);
            let c = trace.c.rows_slice(lo, hi);
            let hp = trace.h_prev.rows_slice(lo, hi);
            {
                let dac = da_c.rows_slice_mut(lo, hi);
                let dau = da_u.rows_slice_mut(lo, hi);
                for i in 0..batch * hid {
                    let dc = g[i] * (1.0 - u[i]);
                    let du = g[i] * (hp[i] - c[i]);
                    carry[i] = g[i] * u[i];
                    dac[i] = dc * (1.0 - c[i] * c[i]);
                    dau[i] = du * u[i] * (1.0 - u[i]);
                }
            }
            drh.iter_mut().for_each(|v| *v = 0.0);
            gemm_acc(da_c.rows_slice(lo, hi), &wc_ht, &mut drh, batch, hid, hid);
            {
                let dar = da_r.rows_slice_mut(lo, hi);
                for i in 0..batch * hid {
                    carry[i] += drh[i] * r[i];
                    dar[i] = drh[i] * hp[i] * r[i] * (1.0 - r[i]);
                }
            }
            gemm_acc(da_r.rows_slice(lo, hi), &wr_ht, &mut carry, batch, hid, hid);
            gemm_acc(da_u.rows_slice(lo, hi), &wu_ht, &mut carry, batch, hid, hid);
        }

        let rows = inp + hid;
        let weight_grad = |da: &Matrix, recurrent: &Matrix| {
            let mut gw = Matrix::zeros(rows, hid);
            let (top, bottom) = gw.as_mut_slice().split_at_mut(inp * hid);
            gemm_tn_acc(x.data().as_slice(), da.as_slice(), top, n, inp, hid);
            gemm_tn_acc(recurrent.as_slice(), da.as_slice(), bottom, n, hid, hid);
            gw
        };
        let bias_grad = |da: &Matrix| {
            let mut gb = Matrix::zeros(1, hid);
            da.column_sums_into(gb.as_mut_slice());
            gb
        };
        let grads = vec![
            weight_grad(&da_r, &trace.h_prev),
            bias_grad(&da_r),
            weight_grad(&da_u, &trace.h_prev),
            bias_grad(&da_u),
            weight_grad(&da_c, &trace.rh),
            bias_grad(&da_c),
        ];

        let mut dx = SeqBatch::zeros(steps, batch, inp);
        for (da, w) in [(&da_r, &self.w_r), (&da_u, &self.w_u), (&da_c, &self.w_c)] {
            let wxt = transposed(Self::input_part(w, inp, hid), inp, hid);
            gemm_acc(da.as_slice(), &wxt, dx.data_mut().as_mut_slice(), n, hid, inp);
        }
        Ok((dx, grads))
    }
}

impl Parameterized for GruLayer {
    fn params(&self) -> Vec<&ParamTensor> {
        vec![&self.w_r, &self.b_r, &self.w_u, &self.b_u, &self.w_c, &self.b_c]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![
            &mut self.w_r,
            &mut self.b_r,
            &mut self.w_u,
            &mut self.b_u,
            &mut self.w_c,
            &mut self.b_c,
        ]
    }
}

/// One cell application for a single sample.
pub fn gru_cell(y: &[f64], h_prev: &[f64], p: &GruLayer) -> Result<(Vec<f64>, GateTrace)> {
    if h_prev.len() != p.hidden_size() {
        return Err(Error::dim(
            "gru_cell",
            format!("hidden length {}", h_prev.len()),
            format!("hidden size {}", p.hidden_size()),
        ));
    }
    let x = SeqBatch::from_sample(&Matrix::row_vector(y));
    let h0 = Matrix::row_vector(h_prev);
    let (out, trace) = p.forward(&x, Some(&h0))?;
    let gates = GateTrace {
        r: trace.r.as_slice().to_vec(),
        u: trace.u.as_slice().to_vec(),
        c: trace.c.as_slice().to_vec(),
    };
    Ok((out.into_data().into_vec(), gates))
}

/// Hidden sequence `T×H` for one `T×input` sample, starting from zeros.
pub fn gru_layer_forward(seq: &Matrix, p: &GruLayer, h0: Option<&[f64]>) -> Result<Matrix> {
    let h0 = h0.map(Matrix::row_vector);
    let (out, _) = p.forward(&SeqBatch::from_sample(seq), h0.as_ref())?;
    Ok(out.into_data())
}
