//! Standard LSTM with forget gate, used by the recurrent baseline.
//!
//! `i, f, o = σ(W [x, h] + b)`, `g = tanh(W_g [x, h] + b_g)`,
//! `c' = f ⊙ c + i ⊙ g`, `h' = o ⊙ tanh(c')`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, SeqBatch};
use crate::numerics::{
    gemm_acc, gemm_tn_acc, sigmoid, transposed, Matrix, ParamTensor, Parameterized,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    input_size: usize,
    hidden_size: usize,
    pub w_i: ParamTensor,
    pub b_i: ParamTensor,
    pub w_f: ParamTensor,
    pub b_f: ParamTensor,
    pub w_g: ParamTensor,
    pub b_g: ParamTensor,
    pub w_o: ParamTensor,
    pub b_o: ParamTensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gate {
    Input,
    Forget,
    Cell,
    Output,
}

const GATES: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Cell, Gate::Output];

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmTrace {
    input: SeqBatch,
    h_prev: Matrix,
    c_prev: Matrix,
    /// post-nonlinearity gate values, in `GATES` order
    gates: [Matrix; 4],
    cell: Matrix,
    tanh_c: Matrix,
}

impl LstmLayer {
    pub fn new(name: &str, input_size: usize, hidden_size: usize) -> Result<Self> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::Config(format!(
                "lstm layer {name}: input {input_size} and hidden {hidden_size} must be >= 1"
            )));
        }
        let rows = input_size + hidden_size;
        let w = |g: &str| ParamTensor::zeros(format!("{name}.w_{g}"), rows, hidden_size);
        let b = |g: &str| ParamTensor::zeros(format!("{name}.b_{g}"), 1, hidden_size);
        Ok(Self {
            input_size,
            hidden_size,
            w_i: w("i"),
            b_i: b("i"),
            w_f: w("f"),
            b_f: b("f"),
            w_g: w("g"),
            b_g: b("g"),
            w_o: w("o"),
            b_o: b("o"),
        })
    }

    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (rows, h) = (self.input_size + self.hidden_size, self.hidden_size);
        for w in [&mut self.w_i, &mut self.w_f, &mut self.w_g, &mut self.w_o] {
            w.value = glorot_uniform(rng, rows, h, rows, h);
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    fn weights(&self, g: Gate) -> (&ParamTensor, &ParamTensor) {
        match g {
            Gate::Input => (&self.w_i, &self.b_i),
            Gate::Forget => (&self.w_f, &self.b_f),
            Gate::Cell => (&self.w_g, &self.b_g),
            Gate::Output => (&self.w_o, &self.b_o),
        }
    }

    pub fn forward(
        &self,
        x: &SeqBatch,
        state: Option<&LstmState>,
    ) -> Result<(SeqBatch, LstmTrace)> {
        let (inp, hid) = (self.input_size, self.hidden_size);
        if x.width() != inp {
            return Err(Error::dim(
                "lstm forward",
                format!("input width {}", x.width()),
                format!("layer input size {inp}"),
            ));
        }
        let (steps, batch) = (x.steps(), x.batch());
        let n = steps * batch;
        let (mut h, mut c) = match state {
            Some(s) if s.h.len() == batch * hid && s.c.len() == batch * hid => {
                (s.h.clone(), s.c.clone())
            }
            Some(s) => {
                return Err(Error::dim(
                    "lstm initial state",
                    format!("{} values", batch * hid),
                    format!("h {} / c {}", s.h.len(), s.c.len()),
                ))
            }
            None => (vec![0.0; batch * hid], vec![0.0; batch * hid]),
        };

        let mut gates = GATES.map(|g| {
            let (w, b) = self.weights(g);
            let mut a = Matrix::zeros(n, hid);
            a.add_row_broadcast(b.value.as_slice());
            gemm_acc(
                x.data().as_slice(),
                &w.value.as_slice()[..inp * hid],
                a.as_mut_slice(),
                n,
                inp,
                hid,
            );
            a
        });
        let mut h_prev = Matrix::zeros(n, hid);
        let mut c_prev = Matrix::zeros(n, hid);
        let mut cell = Matrix::zeros(n, hid);
        let mut tanh_c = Matrix::zeros(n, hid);
        let mut out = SeqBatch::zeros(steps, batch, hid);

        for t in 0..steps {
            let (lo, hi) = (t * batch, (t + 1) * batch);
            h_prev.rows_slice_mut(lo, hi).copy_from_slice(&h);
            c_prev.rows_slice_mut(lo, hi).copy_from_slice(&c);
            for (gate, a) in GATES.iter().zip(gates.iter_mut()) {
                let (w, _) = self.weights(*gate);
                let a_t = a.rows_slice_mut(lo, hi);
                gemm_acc(&h, &w.value.as_slice()[inp * hid..], a_t, batch, hid, hid);
                if *gate == Gate::Cell {
                    a_t.iter_mut().for_each(|v| *v = v.tanh());
                } else {
                    a_t.iter_mut().for_each(|v| *v = sigmoid(*v));
                }
            }
            let [gi, gf, gg, go] = &gates;
            let (i_t, f_t, g_t, o_t) = (
                gi.rows_slice(lo, hi),
                gf.rows_slice(lo, hi),
                gg.rows_slice(lo, hi),
                go.rows_slice(lo, hi),
            );
            let tc = tanh_c.rows_slice_mut(lo, hi);
            for k in 0..batch * hid {
                c[k] = f_t[k] * c[k] + i_t[k] * g_t[k];
                tc[k] = c[k].tanh();
                h[k] = o_t[k] * tc[k];
            }
            cell.rows_slice_mut(lo, hi).copy_from_slice(&c);
            out.step_mut(t).copy_from_slice(&h);
        }

        let trace = LstmTrace {
            input: x.clone(),
            h_prev,
            c_prev,
            gates,
            cell,
            tanh_c,
        };
        Ok((out, trace))
    }

    pub fn backward(&self, trace: &LstmTrace, dh: &SeqBatch) -> Result<(SeqBatch, Vec<Matrix>)> {
        let (inp, hid) = (self.input_size, self.hidden_size);
        let x = &trace.input;
        let (steps, batch) = (x.steps(), x.batch());
        if dh.steps() != steps || dh.batch() != batch || dh.width() != hid {
            return Err(Error::dim(
                "lstm backward",
                format!("{steps} steps x {batch} x {hid}"),
                format!("{} steps x {} x {}", dh.steps(), dh.batch(), dh.width()),
            ));
        }
        let n = steps * batch;
        let w_ht: Vec<Vec<f64>> = GATES
            .iter()
            .map(|&g| transposed(&self.weights(g).0.value.as_slice()[inp * hid..], hid, hid))
            .collect();
        let mut da: [Matrix; 4] = std::array::from_fn(|_| Matrix::zeros(n, hid));
        let mut carry_h = vec![0.0; batch * hid];
        let mut carry_c = vec![0.0; batch * hid];

        for t in (0..steps).rev() {
            let (lo, hi) = (t * batch, (t + 1) * batch);
            let [gi, gf, gg, go] = &trace.gates;
            let (i_t, f_t, g_t, o_t) = (
                gi.rows_slice(lo, hi),
                gf.rows_slice(lo, hi),
                gg.rows_slice(lo, hi),
                go.rows_slice(lo, hi),
            );
            let tc = trace.tanh_c.rows_slice(lo, hi);
            let cp = trace.c_prev.rows_slice(lo, hi);
            let dh_t = dh.step(t);
            {
                let [dai, daf, dag, dao] = &mut da;
                let (dai, daf, dag, dao) = (
                    dai.rows_slice_mut(lo, hi),
                    daf.rows_slice_mut(lo, hi),
                    dag.rows_slice_mut(lo, hi),
                    dao.rows_slice_mut(lo, hi),
                );
                for k in 0..batch * hid {
                    let g = dh_t[k] + carry_h[k];
                    let dc = carry_c[k] + g * o_t[k] * (1.0 - tc[k] * tc[k]);
                    dao[k] = g * tc[k] * o_t[k] * (1.0 - o_t[k]);
                    dai[k] = dc * g_t[k] * i_t[k] * (1.0 - i_t[k]);
                    daf[k] = dc * cp[k] * f_t[k] * (1.0 - f_t[k]);
                    dag[k] = dc * i_t[k] * (1.0 - g_t[k] * g_t[k]);
                    carry_c[k] = dc * f_t[k];
                }
            }
            carry_h.iter_mut().for_each(|v| *v = 0.0);
            for (a, wt) in da.iter().zip(&w_ht) {
                gemm_acc(a.rows_slice(lo, hi), wt, &mut carry_h, batch, hid, hid);
            }
        }

        let mut grads = Vec::with_capacity(8);
        for a in &da {
            let mut gw = Matrix::zeros(inp + hid, hid);
            let (top, bottom) = gw.as_mut_slice().split_at_mut(inp * hid);
            gemm_tn_acc(x.data().as_slice(), a.as_slice(), top, n, inp, hid);
            gemm_tn_acc(trace.h_prev.as_slice(), a.as_slice(), bottom, n, hid, hid);
            let mut gb = Matrix::zeros(1, hid);
            a.column_sums_into(gb.as_mut_slice());
            grads.push(gw);
            grads.push(gb);
        }

        let mut dx = SeqBatch::zeros(steps, batch, inp);
        for (a, &g) in da.iter().zip(&GATES) {
            let wxt = transposed(&self.weights(g).0.value.as_slice()[..inp * hid], inp, hid);
            gemm_acc(a.as_slice(), &wxt, dx.data_mut().as_mut_slice(), n, hid, inp);
        }
        Ok((dx, grads))
    }
}

impl Parameterized for LstmLayer {
    fn params(&self) -> Vec<&ParamTensor> {
        vec![
            &self.w_i, &self.b_i, &self.w_f, &self.b_f, &self.w_g, &self.b_g, &self.w_o,
            &self.b_o,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![
            &mut self.w_i,
            &mut self.b_i,
            &mut self.w_f,
            &mut self.b_f,
            &mut self.w_g,
            &mut self.b_g,
            &mut self.w_o,
            &mut self.b_o,
        ]
    }
}

/// One step for a single sample.
pub fn lstm_cell(y: &[f64], state: &LstmState, p: &LstmLayer) -> Result<LstmState> {
    let x = SeqBatch::from_sample(&Matrix::row_vector(y));
    let (out, trace) = p.forward(&x, Some(state))?;
    Ok(LstmState {
        h: out.into_data().into_vec(),
        c: trace.cell.into_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_zero_state() {
        let p = LstmLayer::new("l", 2, 3).unwrap();
        let s = LstmState {
            h: vec![0.0; 3],
            c: vec![0.0; 3],
        };
        let next = lstm_cell(&[1.0, -2.0], &s, &p).unwrap();
        assert_eq!(next.h, vec![0.0; 3]);
        assert_eq!(next.c, vec![0.0; 3]);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell() {
        let mut p = LstmLayer::new("l", 1, 2).unwrap();
        p.b_f.value.fill(50.0);
        let s = LstmState {
            h: vec![0.3, -0.2],
            c: vec![1.25, -0.75],
        };
        let next = lstm_cell(&[0.9], &s, &p).unwrap();
        for (a, b) in next.c.iter().zip(&s.c) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn scalar_fixture() {
        // tests/oracles/fixtures.py: lstm
        let mut p = LstmLayer::new("l", 1, 1).unwrap();
        p.w_i.value = Matrix::new(2, 1, vec![0.5, -0.3]).unwrap();
        p.b_i.value = Matrix::row_vector(&[0.1]);
        p.w_f.value = Matrix::new(2, 1, vec![0.2, 0.6]).unwrap();
        p.b_f.value = Matrix::row_vector(&[-0.1]);
        p.w_g.value = Matrix::new(2, 1, vec![-0.7, 0.4]).unwrap();
        p.b_g.value = Matrix::row_vector(&[0.05]);
        p.w_o.value = Matrix::new(2, 1, vec![0.9, -0.2]).unwrap();
        let s = LstmState {
            h: vec![0.3],
            c: vec![-0.5],
        };
        let next = lstm_cell(&[0.8], &s, &p).unwrap();
        assert!((next.c[0] - -0.5030769562965337).abs() < 1e-12);
        assert!((next.h[0] - -0.30624858773583263).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let p = LstmLayer::new("l", 2, 2).unwrap();
        let s = LstmState {
            h: vec![0.0; 2],
            c: vec![0.0; 2],
        };
        assert!(lstm_cell(&[1.0], &s, &p).is_err());
        let bad = LstmState {
            h: vec![0.0; 3],
            c: vec![0.0; 2],
        };
        assert!(lstm_cell(&[1.0, 2.0], &bad, &p).is_err());
    }
}
