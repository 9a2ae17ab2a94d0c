use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp, MlpTrace};
use super::recurrent::{CellKind, LayerTrace, RecurrentLayer};
use crate::data::Sequences;
use crate::error::{invalid, shape_err, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Architecture of a SHRED network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub cell: CellKind,
    /// Number of sensors.
    pub input_size: usize,
    /// Hidden width of every recurrent layer; also the latent dimension.
    pub hidden_size: usize,
    pub num_layers: usize,
    pub decoder_layers: Vec<usize>,
    pub activation: Activation,
    /// Total encoded target width.
    pub output_size: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Two 64-wide LSTM layers and a (350, 400) ReLU decoder.
    pub fn new(input_size: usize, output_size: usize) -> Self {
        Self {
            cell: CellKind::Lstm,
            input_size,
            hidden_size: 64,
            num_layers: 2,
            decoder_layers: vec![350, 400],
            activation: Activation::Relu,
            output_size,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.output_size == 0 {
            return invalid("model input and output widths must be positive");
        }
        if self.hidden_size == 0 || self.num_layers == 0 {
            return invalid("encoder needs at least one layer of positive width");
        }
        if self.decoder_layers.contains(&0) {
            return invalid("decoder layer widths must be positive");
        }
        Ok(())
    }
}

/// Recurrent encoder stack followed by an MLP decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub encoder: Vec<RecurrentLayer>,
    pub decoder: Mlp,
}

/// Saved activations of one batched forward pass.
#[derive(Clone, Debug)]
pub struct NetTrace {
    batch: usize,
    encoder: Vec<LayerTrace>,
    decoder: MlpTrace,
}

impl NetTrace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// B × h latents.
    pub fn latents(&self) -> &[f64] {
        self.decoder.values.first().expect("decoder input")
    }

    /// B × out decoder outputs.
    pub fn outputs(&self) -> &[f64] {
        self.decoder.values.last().expect("decoder output")
    }
}

impl Network {
    pub fn init(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut r = rng::seeded(cfg.seed);
        let encoder = (0..cfg.num_layers)
            .map(|l| {
                let input = if l == 0 {
                    cfg.input_size
                } else {
                    cfg.hidden_size
                };
                RecurrentLayer::init(cfg.cell, input, cfg.hidden_size, &mut r)
            })
            .collect();
        let decoder = Mlp::init(
            cfg.hidden_size,
            &cfg.decoder_layers,
            cfg.output_size,
            cfg.activation,
            &mut r,
        );
        Ok(Self { encoder, decoder })
    }

    pub fn input_width(&self) -> usize {
        self.encoder[0].input
    }

    pub fn latent_width(&self) -> usize {
        self.encoder.last().expect("nonempty encoder").hidden
    }

    pub fn output_width(&self) -> usize {
        self.decoder.output()
    }

    /// Parameter groups in checkpoint order: `w_ih, w_hh, b_ih, b_hh` per
    /// recurrent layer, then `w, b` per dense layer.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.encoder {
            out.extend(l.params());
        }
        for d in &self.decoder.layers {
            out.push(&d.w);
            out.push(&d.b);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.encoder {
            out.extend(l.params_mut());
        }
        for d in &mut self.decoder.layers {
            out.push(&mut d.w);
            out.push(&mut d.b);
        }
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.encoder.len() {
            for n in ["w_ih", "w_hh", "b_ih", "b_hh"] {
                out.push(format!("encoder.{i}.{n}"));
            }
        }
        for i in 0..self.decoder.layers.len() {
            out.push(format!("decoder.{i}.w"));
            out.push(format!("decoder.{i}.b"));
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.params().iter().map(|p| vec![0.0; p.len()]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params()
            .iter()
            .all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Rearranges selected windows into per-step batches.
    fn gather_steps(seqs: &Sequences, idx: &[usize]) -> Vec<Vec<f64>> {
        let (lags, s) = (seqs.lags(), seqs.width());
        (0..lags)
            .map(|t| {
                let mut step = Vec::with_capacity(idx.len() * s);
                for &i in idx {
                    step.extend_from_slice(&seqs.window(i)[t * s..(t + 1) * s]);
                }
                step
            })
            .collect()
    }

    pub fn check_inputs(&self, seqs: &Sequences) -> Result<()> {
        if seqs.width() != self.input_width() {
            return shape_err(format!(
                "network expects {} sensors per step, got {}",
                self.input_width(),
                seqs.width()
            ));
        }
        Ok(())
    }

    /// Forward pass over windows `idx` of `seqs`, keeping everything needed
    /// for backpropagation.
    pub fn forward(&self, seqs: &Sequences, idx: &[usize]) -> NetTrace {
        let batch = idx.len();
        let mut steps = Self::gather_steps(seqs, idx);
        let mut encoder = Vec::with_capacity(self.encoder.len());
        for layer in &self.encoder {
            let tr = layer.forward(steps, batch);
            steps = tr.hidden[1..].to_vec();
            encoder.push(tr);
        }
        let latent = steps.pop().expect("at least one step");
        let decoder = self.decoder.forward(latent, batch);
        NetTrace {
            batch,
            encoder,
            decoder,
        }
    }

    /// Encoder-only forward pass; returns B × h latents.
    fn encode_batch(&self, seqs: &Sequences, idx: &[usize]) -> Vec<f64> {
        let batch = idx.len();
        let mut steps = Self::gather_steps(seqs, idx);
        for layer in &self.encoder {
            let mut tr = layer.forward(steps, batch);
            tr.hidden.remove(0);
            steps = tr.hidden;
        }
        steps.pop().expect("at least one step")
    }

    /// Gradients of a loss whose derivative w.r.t. the outputs is `d_output`
    /// (B × out) and, optionally, w.r.t. the latents is `d_latent` (B × h).
    pub fn backward(
        &self,
        tr: &NetTrace,
        d_output: Vec<f64>,
        d_latent: Option<&[f64]>,
    ) -> Vec<Vec<f64>> {
        let batch = tr.batch;
        let mut grads = self.zero_grads();
        let enc_groups = 4 * self.encoder.len();
        let (enc_grads, dec_grads) = grads.split_at_mut(enc_groups);
        let mut d_lat = self
            .decoder
            .backward(&tr.decoder, d_output, batch, dec_grads);
        if let Some(extra) = d_latent {
            for (a, b) in d_lat.iter_mut().zip(extra) {
                *a += b;
            }
        }
        let lags = tr.encoder[0].inputs.len();
        let h = self.latent_width();
        let mut d_out: Vec<Vec<f64>> = vec![vec![0.0; batch * h]; lags];
        d_out[lags - 1] = d_lat;
        for (l, layer) in self.encoder.iter().enumerate().rev() {
            d_out = layer.backward(
                &tr.encoder[l],
                &d_out,
                batch,
                &mut enc_grads[4 * l..4 * l + 4],
            );
        }
        grads
    }

    const CHUNK: usize = 256;

    /// Latents for every window, N × h.
    pub fn encode(&self, seqs: &Sequences) -> Result<Matrix> {
        self.check_inputs(seqs)?;
        let mut data = Vec::with_capacity(seqs.len() * self.latent_width());
        let all: Vec<usize> = (0..seqs.len()).collect();
        for idx in all.chunks(Self::CHUNK) {
            data.extend(self.encode_batch(seqs, idx));
        }
        Matrix::from_vec(seqs.len(), self.latent_width(), data)
    }

    /// Decoder outputs for latent rows, N × out.
    pub fn decode(&self, latents: &Matrix) -> Result<Matrix> {
        if latents.cols() != self.latent_width() {
            return shape_err(format!(
                "decoder expects latents of width {}, got {}",
                self.latent_width(),
                latents.cols()
            ));
        }
        let n = latents.rows();
        let mut out = Vec::with_capacity(n * self.output_width());
        let w = self.latent_width();
        for start in (0..n).step_by(Self::CHUNK) {
            let end = (start + Self::CHUNK).min(n);
            let x = latents.as_slice()[start * w..end * w].to_vec();
            let mut tr = self.decoder.forward(x, end - start);
            out.extend(tr.values.pop().expect("decoder output"));
        }
        Matrix::from_vec(n, self.output_width(), out)
    }

    /// Full forward pass for every window, N × out.
    pub fn predict(&self, seqs: &Sequences) -> Result<Matrix> {
        self.decode(&self.encode(seqs)?)
    }
}
