use serde::{Deserialize, Serialize};

use crate::data::Sequences;
use crate::error::{invalid, shape_err, Result};
use crate::linalg::Matrix;
use crate::model::{
    fit_network, Activation, CellKind, ModelConfig, Network, Samples, TrainConfig, TrainReport,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecasterConfig {
    pub cell: CellKind,
    pub hidden_size: usize,
    pub num_layers: usize,
    /// Fraction of the (window, next) pairs held out, taken from the end.
    pub val_fraction: f64,
    pub train: TrainConfig,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            cell: CellKind::Lstm,
            hidden_size: 32,
            num_layers: 1,
            val_fraction: 0.1,
            train: TrainConfig::default(),
        }
    }
}

/// Recurrent next-step predictor on latent windows. It predicts the
/// increment from the last latent in the window; the output layer starts at
/// zero so an untrained forecaster holds the state constant.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentForecaster {
    pub config: ModelConfig,
    pub net: Network,
    pub window: usize,
}

impl RecurrentForecaster {
    pub fn new(dim: usize, window: usize, cfg: &ForecasterConfig) -> Result<Self> {
        if window == 0 {
            return invalid("forecaster window must be at least 1");
        }
        let config = ModelConfig {
            cell: cfg.cell,
            input_size: dim,
            hidden_size: cfg.hidden_size,
            num_layers: cfg.num_layers,
            decoder_layers: Vec::new(),
            activation: Activation::Tanh,
            output_size: dim,
            seed: cfg.train.seed,
        };
        let mut net = Network::init(&config)?;
        for p in net.params_mut().into_iter().rev().take(2) {
            p.fill(0.0);
        }
        Ok(Self {
            config,
            net,
            window,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.input_size
    }

    /// One-step predictions for each window.
    fn step(&self, seqs: &Sequences) -> Result<Matrix> {
        let mut next = self.net.predict(seqs)?;
        let (w, h) = (self.window, self.dim());
        for i in 0..seqs.len() {
            let last = &seqs.window(i)[(w - 1) * h..];
            for (v, l) in next.row_mut(i).iter_mut().zip(last) {
                *v += l;
            }
        }
        Ok(next)
    }

    /// Autoregressive rollout from exactly `window` seed rows.
    pub fn forecast(&self, seed: &Matrix, steps: usize) -> Result<Matrix> {
        if seed.rows() != self.window || seed.cols() != self.dim() {
            return shape_err(format!(
                "seed must be {}x{}, got {}x{}",
                self.window,
                self.dim(),
                seed.rows(),
                seed.cols()
            ));
        }
        let h = self.dim();
        let mut buf = seed.as_slice().to_vec();
        let mut out = Matrix::zeros(steps, h);
        for s in 0..steps {
            let seqs = Sequences::new(1, self.window, h, buf.clone())?;
            let next = self.step(&seqs)?;
            out.row_mut(s).copy_from_slice(next.row(0));
            buf.drain(..h);
            buf.extend_from_slice(next.row(0));
        }
        Ok(out)
    }
}

fn pairs(
    latents: &Matrix,
    window: usize,
    range: std::ops::Range<usize>,
) -> Result<(Sequences, Matrix, Vec<usize>)> {
    let h = latents.cols();
    let mut data = Vec::with_capacity(range.len() * window * h);
    let mut targets = Matrix::zeros(range.len(), h);
    for (k, t) in range.clone().enumerate() {
        for j in t..t + window {
            data.extend_from_slice(latents.row(j));
        }
        let last = latents.row(t + window - 1);
        for (c, v) in targets.row_mut(k).iter_mut().enumerate() {
            *v = latents.get(t + window, c) - last[c];
        }
    }
    Ok((
        Sequences::new(range.len(), window, h, data)?,
        targets,
        range.collect(),
    ))
}

/// Trains a forecaster on every (window, next latent) pair of a latent
/// time series.
pub fn fit_recurrent_forecaster(
    latents: &Matrix,
    window: usize,
    cfg: &ForecasterConfig,
) -> Result<(RecurrentForecaster, TrainReport)> {
    if latents.rows() <= window {
        return invalid(format!(
            "need more than {window} latent rows to train a window-{window} forecaster, got {}",
            latents.rows()
        ));
    }
    if !(0.0..1.0).contains(&cfg.val_fraction) {
        return invalid(format!(
            "validation fraction must lie in [0, 1), got {}",
            cfg.val_fraction
        ));
    }
    let mut rf = RecurrentForecaster::new(latents.cols(), window, cfg)?;
    let count = latents.rows() - window;
    let n_val = (count as f64 * cfg.val_fraction).round() as usize;
    // too few pairs to hold any out: validate on the training pairs
    let (train_range, val_range) = if n_val == 0 || n_val >= count {
        (0..count, 0..count)
    } else {
        (0..count - n_val, count - n_val..count)
    };
    let (ts, tt, tr) = pairs(latents, window, train_range)?;
    let (vs, vt, vr) = pairs(latents, window, val_range)?;
    let report = fit_network(
        &mut rf.net,
        Samples {
            seqs: &ts,
            targets: &tt,
            rows: &tr,
        },
        Samples {
            seqs: &vs,
            targets: &vt,
            rows: &vr,
        },
        &cfg.train,
        None,
    )?;
    Ok((rf, report))
}

/// Rollout of `rf` from a seed of exactly `rf.window` rows.
pub fn recurrent_forecast(rf: &RecurrentForecaster, seed: &Matrix, steps: usize) -> Result<Matrix> {
    rf.forecast(seed, steps)
}
