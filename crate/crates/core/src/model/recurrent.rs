//! Batched GRU and LSTM layers with exact backpropagation through time.
//!
//! Gate layout follows the common convention: GRU gates are ordered
//! `(r, z, n)` with `n = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))`;
//! LSTM gates are ordered `(i, f, g, o)`. Weights are stored input-major so
//! a batch `x` (B × in) multiplies as `x · W`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::linalg::{gemm_nn, gemm_nt, gemm_tn};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Gru,
    Lstm,
}

impl CellKind {
    pub fn gates(self) -> usize {
        match self {
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }
}

impl std::str::FromStr for CellKind {
    type Err = crate::ShredError;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GRU" => Ok(CellKind::Gru),
            "LSTM" => Ok(CellKind::Lstm),
            other => Err(crate::ShredError::InvalidArgument(format!(
                "unknown sequence model `{other}` (GRU or LSTM)"
            ))),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentLayer {
    pub kind: CellKind,
    pub input: usize,
    pub hidden: usize,
    /// input × gates·hidden
    pub w_ih: Vec<f64>,
    /// hidden × gates·hidden
    pub w_hh: Vec<f64>,
    pub b_ih: Vec<f64>,
    pub b_hh: Vec<f64>,
}

/// Activations saved by a training forward pass of one layer.
#[derive(Clone, Debug, Default)]
pub struct LayerTrace {
    /// per step, B × input
    pub inputs: Vec<Vec<f64>>,
    /// L + 1 entries, B × hidden; entry 0 is the zero initial state
    pub hidden: Vec<Vec<f64>>,
    /// LSTM cell states, L + 1 entries
    cells: Vec<Vec<f64>>,
    /// activated gates per step, B × gates·hidden
    gates: Vec<Vec<f64>>,
    /// GRU: `W_hn h + b_hn` per step
    hidden_candidate: Vec<Vec<f64>>,
}

impl RecurrentLayer {
    pub fn init(kind: CellKind, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let g = kind.gates() * hidden;
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut draw = |n: usize| {
            (0..n)
                .map(|_| rng.random_range(-bound..bound))
                .collect::<Vec<f64>>()
        };
        Self {
            kind,
            input,
            hidden,
            w_ih: draw(input * g),
            w_hh: draw(hidden * g),
            b_ih: draw(g),
            b_hh: draw(g),
        }
    }

    pub fn zeroed(kind: CellKind, input: usize, hidden: usize) -> Self {
        let g = kind.gates() * hidden;
        Self {
            kind,
            input,
            hidden,
            w_ih: vec![0.0; input * g],
            w_hh: vec![0.0; hidden * g],
            b_ih: vec![0.0; g],
            b_hh: vec![0.0; g],
        }
    }

    fn width(&self) -> usize {
        self.kind.gates() * self.hidden
    }

    /// Runs the layer over `steps` (each B × input). Returns the trace, whose
    /// `hidden[1..]` are the layer outputs.
    pub fn forward(&self, steps: Vec<Vec<f64>>, batch: usize) -> LayerTrace {
        let (h, g) = (self.hidden, self.width());
        let len = steps.len();
        let mut tr = LayerTrace {
            hidden: Vec::with_capacity(len + 1),
            gates: Vec::with_capacity(len),
            ..Default::default()
        };
        tr.hidden.push(vec![0.0; batch * h]);
        if self.kind == CellKind::Lstm {
            tr.cells.push(vec![0.0; batch * h]);
        }
        let mut gi = vec![0.0; batch * g];
        let mut gh = vec![0.0; batch * g];
        for x in &steps {
            let h_prev = tr.hidden.last().expect("initial state");
            for b in 0..batch {
                gi[b * g..(b + 1) * g].copy_from_slice(&self.b_ih);
                gh[b * g..(b + 1) * g].copy_from_slice(&self.b_hh);
            }
            gemm_nn(&mut gi, x, &self.w_ih, batch, self.input, g);
            gemm_nn(&mut gh, h_prev, &self.w_hh, batch, h, g);
            let mut act = vec![0.0; batch * g];
            let mut h_new = vec![0.0; batch * h];
            match self.kind {
                CellKind::Gru => {
                    let mut hn = vec![0.0; batch * h];
                    for b in 0..batch {
                        let (gi, gh, a) =
                            (&gi[b * g..], &gh[b * g..], &mut act[b * g..(b + 1) * g]);
                        for k in 0..h {
                            let r = sigmoid(gi[k] + gh[k]);
                            let z = sigmoid(gi[h + k] + gh[h + k]);
                            let cand = gh[2 * h + k];
                            let n = (gi[2 * h + k] + r * cand).tanh();
                            a[k] = r;
                            a[h + k] = z;
                            a[2 * h + k] = n;
                            hn[b * h + k] = cand;
                            h_new[b * h + k] = (1.0 - z) * n + z * h_prev[b * h + k];
                        }
                    }
                    tr.hidden_candidate.push(hn);
                }
                CellKind::Lstm => {
                    let c_prev = tr.cells.last().expect("initial cell");
                    let mut c_new = vec![0.0; batch * h];
                    for b in 0..batch {
                        let (gi, gh, a) =
                            (&gi[b * g..], &gh[b * g..], &mut act[b * g..(b + 1) * g]);
                        for k in 0..h {
                            let i = sigmoid(gi[k] + gh[k]);
                            let f = sigmoid(gi[h + k] + gh[h + k]);
                            let gg = (gi[2 * h + k] + gh[2 * h + k]).tanh();
                            let o = sigmoid(gi[3 * h + k] + gh[3 * h + k]);
                            a[k] = i;
                            a[h + k] = f;
                            a[2 * h + k] = gg;
                            a[3 * h + k] = o;
                            let c = f * c_prev[b * h + k] + i * gg;
                            c_new[b * h + k] = c;
                            h_new[b * h + k] = o * c.tanh();
                        }
                    }
                    tr.cells.push(c_new);
                }
            }
            tr.gates.push(act);
            tr.hidden.push(h_new);
        }
        tr.inputs = steps;
        tr
    }

    /// Backpropagates `d_out` (per step, B × hidden: loss gradient w.r.t. each
    /// output) through the trace. Accumulates into `grads` laid out as
    /// `[w_ih, w_hh, b_ih, b_hh]` and returns the gradient w.r.t. each input step.
    pub fn backward(
        &self,
        tr: &LayerTrace,
        d_out: &[Vec<f64>],
        batch: usize,
        grads: &mut [Vec<f64>],
    ) -> Vec<Vec<f64>> {
        let (h, g) = (self.hidden, self.width());
        let len = tr.inputs.len();
        let [gw_ih, gw_hh, gb_ih, gb_hh] = grads else {
            panic!("recurrent layer expects four gradient buffers");
        };
        let mut dx_steps = vec![Vec::new(); len];
        let mut dh_carry = vec![0.0; batch * h];
        let mut dc_carry = vec![0.0; batch * h];
        let mut d_in = vec![0.0; batch * g];
        let mut d_hid = vec![0.0; batch * g];
        for t in (0..len).rev() {
            let h_prev = &tr.hidden[t];
            let act = &tr.gates[t];
            let dh: Vec<f64> = dh_carry.iter().zip(&d_out[t]).map(|(a, b)| a + b).collect();
            match self.kind {
                CellKind::Gru => {
                    let hn = &tr.hidden_candidate[t];
                    for b in 0..batch {
                        for k in 0..h {
                            let bk = b * h + k;
                            let (r, z, n) =
                                (act[b * g + k], act[b * g + h + k], act[b * g + 2 * h + k]);
                            let d = dh[bk];
                            let dn = d * (1.0 - z);
                            let dz = d * (h_prev[bk] - n);
                            dh_carry[bk] = d * z;
                            let dan = dn * (1.0 - n * n);
                            let dr = dan * hn[bk];
                            let dar = dr * r * (1.0 - r);
                            let daz = dz * z * (1.0 - z);
                            d_in[b * g + k] = dar;
                            d_in[b * g + h + k] = daz;
                            d_in[b * g + 2 * h + k] = dan;
                            d_hid[b * g + k] = dar;
                            d_hid[b * g + h + k] = daz;
                            d_hid[b * g + 2 * h + k] = dan * r;
                        }
                    }
                }
                CellKind::Lstm => {
                    let (c_prev, c) = (&tr.cells[t], &tr.cells[t + 1]);
                    for b in 0..batch {
                        for k in 0..h {
                            let bk = b * h + k;
                            let base = b * g;
                            let (i, f, gg, o) = (
                                act[base + k],
                                act[base + h + k],
                                act[base + 2 * h + k],
                                act[base + 3 * h + k],
                            );
                            let tc = c[bk].tanh();
                            let d = dh[bk];
                            let d_o = d * tc;
                            let dc = dc_carry[bk] + d * o * (1.0 - tc * tc);
                            dc_carry[bk] = dc * f;
                            d_in[base + k] = dc * gg * i * (1.0 - i);
                            d_in[base + h + k] = dc * c_prev[bk] * f * (1.0 - f);
                            d_in[base + 2 * h + k] = dc * i * (1.0 - gg * gg);
                            d_in[base + 3 * h + k] = d_o * o * (1.0 - o);
                        }
                    }
                    d_hid.copy_from_slice(&d_in);
                    dh_carry.iter_mut().for_each(|v| *v = 0.0);
                }
            }
            gemm_tn(gw_ih, &tr.inputs[t], &d_in, batch, self.input, g);
            gemm_tn(gw_hh, h_prev, &d_hid, batch, h, g);
            for b in 0..batch {
                for j in 0..g {
                    gb_ih[j] += d_in[b * g + j];
                    gb_hh[j] += d_hid[b * g + j];
                }
            }
            let mut dx = vec![0.0; batch * self.input];
            gemm_nt(&mut dx, &d_in, &self.w_ih, batch, g, self.input);
            dx_steps[t] = dx;
            gemm_nt(&mut dh_carry, &d_hid, &self.w_hh, batch, g, h);
        }
        dx_steps
    }

    pub fn params(&self) -> [&[f64]; 4] {
        [&self.w_ih, &self.w_hh, &self.b_ih, &self.b_hh]
    }

    pub fn params_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.w_ih,
            &mut self.w_hh,
            &mut self.b_ih,
            &mut self.b_hh,
        ]
    }
}
