//! Mini-batch training shared by the SHRED network and the recurrent
//! latent forecaster.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{NetTrace, Network};
use super::optim::Adam;
use crate::data::Sequences;
use crate::error::{invalid, shape_err, Result, ShredError};
use crate::forecast::SindyModel;
use crate::linalg::Matrix;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub seed: u64,
    /// Weight of the SINDy consistency term.
    pub sindy_regularization: f64,
    /// Threshold Ξ every this many epochs.
    pub sindy_thres_epoch: usize,
    pub sindy_threshold: f64,
    /// Ridge strength for Ξ refits.
    pub sindy_ridge: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            patience: 20,
            seed: 0,
            sindy_regularization: 0.0,
            sindy_thres_epoch: 20,
            sindy_threshold: 0.05,
            sindy_ridge: 1e-6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return invalid("epochs must be at least 1");
        }
        if self.patience == 0 {
            return invalid("patience must be at least 1");
        }
        if self.batch_size == 0 {
            return invalid("batch size must be at least 1");
        }
        if self.sindy_thres_epoch == 0 {
            return invalid("sindy_thres_epoch must be at least 1");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return invalid(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            ));
        }
        for (name, v) in [
            ("sindy_regularization", self.sindy_regularization),
            ("sindy_threshold", self.sindy_threshold),
            ("sindy_ridge", self.sindy_ridge),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Validation MSE after each completed epoch.
    pub val_errors: Vec<f64>,
    /// Mean mini-batch training loss of each epoch.
    pub train_losses: Vec<f64>,
    /// Zero-based epoch whose weights were restored.
    pub best_epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Windows, targets and the sample row of each window. Consecutive rows
/// mark consecutive time steps of one trajectory.
#[derive(Clone, Copy)]
pub(crate) struct Samples<'a> {
    pub seqs: &'a Sequences,
    pub targets: &'a Matrix,
    pub rows: &'a [usize],
}

impl Samples<'_> {
    fn check(&self, net: &Network, what: &str) -> Result<()> {
        if self.seqs.is_empty() {
            return invalid(format!("{what} dataset is empty"));
        }
        net.check_inputs(self.seqs)?;
        if self.targets.rows() != self.seqs.len() || self.rows.len() != self.seqs.len() {
            return shape_err(format!("{what} dataset has inconsistent lengths"));
        }
        if self.targets.cols() != net.output_width() {
            return shape_err(format!(
                "{what} targets have width {}, network outputs {}",
                self.targets.cols(),
                net.output_width()
            ));
        }
        Ok(())
    }

    /// Maximal index ranges whose rows are consecutive.
    fn runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.rows.len() {
            if i == self.rows.len() || self.rows[i] != self.rows[i - 1] + 1 {
                out.push(start..i);
                start = i;
            }
        }
        out
    }
}

/// Mean squared error over samples and components.
pub(crate) fn mse(outputs: &Matrix, targets: &Matrix) -> Result<f64> {
    if outputs.shape() != targets.shape() {
        return shape_err(format!(
            "outputs {:?} and targets {:?} differ in shape",
            outputs.shape(),
            targets.shape()
        ));
    }
    if targets.rows() == 0 {
        return invalid("cannot evaluate an empty dataset");
    }
    let n = targets.as_slice().len() as f64;
    Ok(outputs
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(o, t)| (o - t) * (o - t))
        .sum::<f64>()
        / n)
}

/// Loss of a traced batch and its gradient. The SINDy term treats the batch
/// latents as one time-ordered sequence and needs at least 3 of them.
pub(crate) fn loss_and_grad(
    net: &Network,
    tr: &NetTrace,
    targets: &[f64],
    sindy: Option<(&SindyModel, f64)>,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let outputs = tr.outputs();
    if targets.len() != outputs.len() {
        return shape_err(format!(
            "batch targets hold {} values, outputs {}",
            targets.len(),
            outputs.len()
        ));
    }
    let n = outputs.len() as f64;
    let mut loss = 0.0;
    let d_out: Vec<f64> = outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| {
            let d = o - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    loss /= n;
    let mut d_lat = None;
    if let Some((model, lambda)) = sindy {
        if lambda > 0.0 && tr.batch() >= 3 {
            let z = Matrix::from_vec(tr.batch(), net.latent_width(), tr.latents().to_vec())?;
            let (c, g) = model.consistency_with_grad(&z)?;
            loss += lambda * c;
            d_lat = Some(g.scaled(lambda).into_vec());
        }
    }
    let grads = net.backward(tr, d_out, d_lat.as_deref());
    Ok((loss, grads))
}

fn gather_targets(targets: &Matrix, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * targets.cols());
    for &i in idx {
        out.extend_from_slice(targets.row(i));
    }
    out
}

fn latent_runs(net: &Network, samples: Samples<'_>) -> Result<Vec<Matrix>> {
    let z = net.encode(samples.seqs)?;
    Ok(samples
        .runs()
        .into_iter()
        .map(|r| z.select_rows(&r.collect::<Vec<_>>()))
        .collect())
}

fn refit_sindy(
    net: &Network,
    samples: Samples<'_>,
    model: &mut SindyModel,
    ridge: f64,
) -> Result<()> {
    let runs = latent_runs(net, samples)?;
    model.refit(&runs.iter().collect::<Vec<_>>(), ridge)
}

/// Trains `net` in place and restores the weights with the lowest
/// validation error. With a SINDy model, batches are contiguous time blocks
/// (block order shuffled) and Ξ is refitted from the training latents at the
/// start of every epoch.
pub(crate) fn fit_network(
    net: &mut Network,
    train: Samples<'_>,
    val: Samples<'_>,
    cfg: &TrainConfig,
    mut sindy: Option<&mut SindyModel>,
) -> Result<TrainReport> {
    cfg.validate()?;
    train.check(net, "training")?;
    val.check(net, "validation")?;
    if let Some(m) = sindy.as_deref_mut() {
        if m.dim() != net.latent_width() {
            return shape_err(format!(
                "SINDy model has dimension {}, latent width is {}",
                m.dim(),
                net.latent_width()
            ));
        }
        m.threshold = cfg.sindy_threshold;
    }
    let mut r = rng::substream(cfg.seed, 0x7124);
    let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    let mut opt = Adam::new(cfg.learning_rate, &sizes);

    let blocks: Vec<Vec<usize>> = if sindy.is_some() {
        train
            .runs()
            .into_iter()
            .flat_map(|run| {
                run.collect::<Vec<_>>()
                    .chunks(cfg.batch_size)
                    .map(|c| c.to_vec())
                    .collect::<Vec<_>>()
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut order: Vec<usize> = (0..train.seqs.len()).collect();

    let mut report = TrainReport {
        val_errors: Vec::new(),
        train_losses: Vec::new(),
        best_epoch: 0,
        train_mse: f64::NAN,
        val_mse: f64::INFINITY,
    };
    let mut best_net = net.clone();
    let mut best_sindy = sindy.as_deref().cloned();
    let mut since_best = 0;

    for epoch in 0..cfg.epochs {
        let batches: Vec<Vec<usize>> = if let Some(m) = sindy.as_deref_mut() {
            refit_sindy(net, train, m, cfg.sindy_ridge)?;
            if epoch > 0 && epoch % cfg.sindy_thres_epoch == 0 {
                m.apply_threshold(cfg.sindy_threshold);
            }
            let mut b = blocks.clone();
            b.shuffle(&mut r);
            b
        } else {
            order.shuffle(&mut r);
            order.chunks(cfg.batch_size).map(|c| c.to_vec()).collect()
        };

        let mut total = 0.0;
        for (bi, idx) in batches.iter().enumerate() {
            let tr = net.forward(train.seqs, idx);
            let targets = gather_targets(train.targets, idx);
            let (loss, grads) = loss_and_grad(
                net,
                &tr,
                &targets,
                sindy.as_deref().map(|m| (m, cfg.sindy_regularization)),
            )?;
            if !loss.is_finite() || grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
                return Err(ShredError::Numeric(format!(
                    "non-finite training loss at epoch {epoch}, batch {bi} (loss {loss}); \
                     try a smaller learning rate"
                )));
            }
            total += loss;
            opt.update(net.params_mut(), &grads);
        }
        report.train_losses.push(total / batches.len() as f64);

        let val_mse = mse(&net.predict(val.seqs)?, val.targets)?;
        if !val_mse.is_finite() {
            return Err(ShredError::Numeric(format!(
                "non-finite validation error at epoch {epoch}"
            )));
        }
        report.val_errors.push(val_mse);
        if val_mse < report.val_mse {
            report.val_mse = val_mse;
            report.best_epoch = epoch;
            best_net = net.clone();
            best_sindy = sindy.as_deref().cloned();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    *net = best_net;
    if let (Some(m), Some(best)) = (sindy, best_sindy) {
        *m = best;
        let runs = latent_runs(net, train)?;
        m.settle(&runs.iter().collect::<Vec<_>>(), cfg.sindy_ridge)?;
    }
    report.train_mse = mse(&net.predict(train.seqs)?, train.targets)?;
    Ok(report)
}
