use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::linalg::{gemm_nn, gemm_nt, gemm_tn};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activated value.
    #[inline]
    fn slope(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    /// input × output
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn init(input: usize, output: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let mut draw = |n: usize| {
            (0..n)
                .map(|_| rng.random_range(-bound..bound))
                .collect::<Vec<f64>>()
        };
        Self {
            input,
            output,
            w: draw(input * output),
            b: draw(output),
        }
    }

    pub fn zeroed(input: usize, output: usize) -> Self {
        Self {
            input,
            output,
            w: vec![0.0; input * output],
            b: vec![0.0; output],
        }
    }

    fn forward(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut y = Vec::with_capacity(batch * self.output);
        for _ in 0..batch {
            y.extend_from_slice(&self.b);
        }
        gemm_nn(&mut y, x, &self.w, batch, self.input, self.output);
        y
    }
}

/// Feed-forward decoder: hidden layers with a shared activation, linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

/// Layer inputs saved by a training forward pass; the last entry is the output.
#[derive(Clone, Debug)]
pub struct MlpTrace {
    pub values: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn init(
        input: usize,
        hidden: &[usize],
        output: usize,
        activation: Activation,
        rng: &mut Rng,
    ) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(output);
        Self {
            layers: dims
                .windows(2)
                .map(|w| Dense::init(w[0], w[1], rng))
                .collect(),
            activation,
        }
    }

    pub fn input(&self) -> usize {
        self.layers[0].input
    }

    pub fn output(&self) -> usize {
        self.layers.last().expect("at least one layer").output
    }

    pub fn forward(&self, x: Vec<f64>, batch: usize) -> MlpTrace {
        let mut values = vec![x];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward(values.last().expect("input"), batch);
            if i < last {
                y.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            values.push(y);
        }
        MlpTrace { values }
    }

    /// Accumulates parameter gradients (`[w, b]` per layer) and returns the
    /// gradient w.r.t. the input.
    pub fn backward(
        &self,
        tr: &MlpTrace,
        d_out: Vec<f64>,
        batch: usize,
        grads: &mut [Vec<f64>],
    ) -> Vec<f64> {
        let mut delta = d_out;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if i < last {
                let y = &tr.values[i + 1];
                for (d, v) in delta.iter_mut().zip(y) {
                    *d *= self.activation.slope(*v);
                }
            }
            let x = &tr.values[i];
            let (gw, rest) = grads[2 * i..2 * i + 2].split_at_mut(1);
            gemm_tn(&mut gw[0], x, &delta, batch, layer.input, layer.output);
            for b in 0..batch {
                for (g, d) in rest[0]
                    .iter_mut()
                    .zip(&delta[b * layer.output..(b + 1) * layer.output])
                {
                    *g += d;
                }
            }
            let mut dx = vec![0.0; batch * layer.input];
            gemm_nt(&mut dx, &delta, &layer.w, batch, layer.output, layer.input);
            delta = dx;
        }
        delta
    }
}
