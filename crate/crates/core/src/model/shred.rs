use super::network::{ModelConfig, NetTrace, Network};
use super::train::{self, Samples, TrainConfig, TrainReport};
use crate::data::{SequenceDataset, Sequences};
use crate::error::{invalid, shape_err, Result, ShredError};
use crate::forecast::{LatentForecaster, SindyModel};
use crate::linalg::Matrix;

/// Recurrent encoder, MLP decoder and an optional latent forecaster.
#[derive(Clone, Debug, PartialEq)]
pub struct ShredModel {
    config: ModelConfig,
    net: Network,
    forecaster: LatentForecaster,
}

impl ShredModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let net = Network::init(&config)?;
        Ok(Self {
            config,
            net,
            forecaster: LatentForecaster::None,
        })
    }

    /// Reassembles a model from stored parts, checking that they agree.
    pub fn from_parts(
        config: ModelConfig,
        net: Network,
        forecaster: LatentForecaster,
    ) -> Result<Self> {
        config.validate()?;
        let layers_ok = net.encoder.len() == config.num_layers
            && net
                .encoder
                .iter()
                .all(|l| l.hidden == config.hidden_size && l.kind == config.cell)
            && net.decoder.layers.len() == config.decoder_layers.len() + 1;
        if !layers_ok
            || net.input_width() != config.input_size
            || net.output_width() != config.output_size
        {
            return shape_err("network layout does not match its configuration");
        }
        if !net.is_finite() {
            return Err(ShredError::NonFinite(
                "model weights contain NaN or infinity".into(),
            ));
        }
        let mut model = Self {
            config,
            net,
            forecaster: LatentForecaster::None,
        };
        model.set_forecaster(forecaster)?;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn latent_dim(&self) -> usize {
        self.net.latent_width()
    }

    pub fn input_width(&self) -> usize {
        self.net.input_width()
    }

    pub fn output_width(&self) -> usize {
        self.net.output_width()
    }

    pub fn forecaster(&self) -> &LatentForecaster {
        &self.forecaster
    }

    pub fn set_forecaster(&mut self, forecaster: LatentForecaster) -> Result<()> {
        if let Some(d) = forecaster.dim() {
            if d != self.latent_dim() {
                return shape_err(format!(
                    "forecaster works on {d}-dimensional latents, model latent is {}",
                    self.latent_dim()
                ));
            }
        }
        self.forecaster = forecaster;
        Ok(())
    }

    fn sindy(&self) -> Option<&SindyModel> {
        match &self.forecaster {
            LatentForecaster::Sindy(m) => Some(m),
            _ => None,
        }
    }

    /// Latent state for one `lags × s` sequence, with the cached activations.
    pub fn encoder_forward(&self, sequence: &Matrix) -> Result<(Vec<f64>, NetTrace)> {
        if !sequence.is_finite() {
            return Err(ShredError::NonFinite(
                "sensor sequence contains NaN or infinity".into(),
            ));
        }
        if sequence.rows() == 0 {
            return invalid("sensor sequence is empty");
        }
        let seqs = Sequences::new(
            1,
            sequence.rows(),
            sequence.cols(),
            sequence.as_slice().to_vec(),
        )?;
        self.net.check_inputs(&seqs)?;
        let tr = self.net.forward(&seqs, &[0]);
        Ok((tr.latents().to_vec(), tr))
    }

    pub fn decoder_forward(&self, latent: &[f64]) -> Result<Vec<f64>> {
        let z = Matrix::from_vec(1, latent.len(), latent.to_vec())?;
        Ok(self.net.decode(&z)?.into_vec())
    }

    /// Traced forward pass over every window of `seqs`.
    pub fn forward_batch(&self, seqs: &Sequences) -> Result<NetTrace> {
        if seqs.is_empty() {
            return invalid("batch is empty");
        }
        self.net.check_inputs(seqs)?;
        Ok(self.net.forward(seqs, &(0..seqs.len()).collect::<Vec<_>>()))
    }

    /// Mean squared reconstruction error plus `lambda` times the SINDy
    /// consistency of the batch latents (taken as a time-ordered sequence).
    pub fn loss(
        &self,
        seqs: &Sequences,
        targets: &Matrix,
        sindy: Option<&SindyModel>,
        lambda: f64,
    ) -> Result<f64> {
        let tr = self.forward_batch(seqs)?;
        Ok(self.backward(&tr, targets, sindy, lambda)?.0)
    }

    /// Loss and exact parameter gradients for a traced batch, in
    /// [`Network::params`] order.
    pub fn backward(
        &self,
        trace: &NetTrace,
        targets: &Matrix,
        sindy: Option<&SindyModel>,
        lambda: f64,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        if targets.rows() != trace.batch() {
            return shape_err(format!(
                "{} targets for a batch of {}",
                targets.rows(),
                trace.batch()
            ));
        }
        train::loss_and_grad(
            &self.net,
            trace,
            targets.as_slice(),
            sindy.map(|m| (m, lambda)),
        )
    }

    pub fn encode(&self, seqs: &Sequences) -> Result<Matrix> {
        self.net.encode(seqs)
    }

    pub fn predict(&self, seqs: &Sequences) -> Result<Matrix> {
        self.net.predict(seqs)
    }

    /// Scaled-target MSE on a dataset.
    pub fn evaluate(&self, ds: &SequenceDataset) -> Result<f64> {
        if ds.is_empty() {
            return invalid("cannot evaluate an empty dataset");
        }
        train::mse(&self.predict(&ds.sequences)?, &ds.targets)
    }

    /// Trains the network. An attached SINDy forecaster is fitted jointly and
    /// left thresholded.
    pub fn fit(
        &mut self,
        train: &SequenceDataset,
        val: &SequenceDataset,
        cfg: &TrainConfig,
    ) -> Result<TrainReport> {
        let tr = Samples {
            seqs: &train.sequences,
            targets: &train.targets,
            rows: &train.rows,
        };
        let va = Samples {
            seqs: &val.sequences,
            targets: &val.targets,
            rows: &val.rows,
        };
        let sindy = match &mut self.forecaster {
            LatentForecaster::Sindy(m) => Some(m),
            _ => None,
        };
        train::fit_network(&mut self.net, tr, va, cfg, sindy)
    }

    /// SINDy consistency of a latent sequence under the attached model.
    pub fn sindy_consistency(&self, latents: &Matrix) -> Result<f64> {
        self.sindy()
            .ok_or_else(|| ShredError::InvalidArgument("no SINDy forecaster attached".into()))?
            .consistency(latents)
    }
}
