//! Downstream use of a trained model: readings to latents, latent
//! forecasting, decoding to physical fields and evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{
    build_lagged_sequences, DataManager, FieldArray, Preprocessing, Sequences, Split,
};
use crate::error::{invalid, shape_err, Result, ShredError};
use crate::linalg::Matrix;
use crate::model::ShredModel;

/// Decoded fields, in registration order, each `T × spatial shape`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldReconstruction {
    fields: Vec<(String, FieldArray)>,
}

impl FieldReconstruction {
    pub fn get(&self, id: &str) -> Option<&FieldArray> {
        self.fields.iter().find(|(k, _)| k == id).map(|(_, v)| v)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(k, _)| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FieldArray)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn into_fields(self) -> Vec<(String, FieldArray)> {
        self.fields
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    pub mse: f64,
    /// Mean over snapshots of `‖ψ − ψ̂‖₂ / ‖ψ‖₂`.
    pub mean_relative_error: f64,
    pub snapshots: usize,
    /// Snapshots left out of the relative mean because `‖ψ‖₂ = 0`.
    pub zero_norm_excluded: usize,
}

/// Mean relative error over rows, skipping rows whose truth has zero norm.
/// Returns the mean and the number of skipped rows; the mean is NaN when
/// every row is skipped.
pub fn mean_relative_error(truth: &Matrix, pred: &Matrix) -> Result<(f64, usize)> {
    if truth.shape() != pred.shape() {
        return shape_err(format!(
            "truth {:?} and prediction {:?} differ in shape",
            truth.shape(),
            pred.shape()
        ));
    }
    let mut sum = 0.0;
    let mut used = 0;
    for i in 0..truth.rows() {
        let norm: f64 = truth.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let err: f64 = truth
            .row(i)
            .iter()
            .zip(pred.row(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        sum += err / norm;
        used += 1;
    }
    let mean = if used == 0 {
        f64::NAN
    } else {
        sum / used as f64
    };
    Ok((mean, truth.rows() - used))
}

/// A trained model bound to the preprocessing of the data it was trained on.
#[derive(Clone, Debug)]
pub struct Engine {
    prep: Preprocessing,
    model: ShredModel,
    /// Raw readings for every sample row, needed by [`Engine::evaluate`].
    measurements: Option<Matrix>,
}

impl Engine {
    pub fn new(prep: Preprocessing, model: ShredModel) -> Result<Self> {
        if model.input_width() != prep.input_width() {
            return shape_err(format!(
                "model reads {} sensors but the data has {}",
                model.input_width(),
                prep.input_width()
            ));
        }
        if model.output_width() != prep.output_width() {
            return shape_err(format!(
                "model outputs {} values but the fields encode to {}",
                model.output_width(),
                prep.output_width()
            ));
        }
        Ok(Self {
            prep,
            model,
            measurements: None,
        })
    }

    /// Engine over a prepared manager; keeps a copy of its readings.
    pub fn from_manager(manager: &DataManager, model: ShredModel) -> Result<Self> {
        let mut e = Self::new(manager.preprocessing()?, model)?;
        e.measurements = Some(manager.measurements().clone());
        Ok(e)
    }

    pub fn set_measurements(&mut self, measurements: Matrix) -> Result<()> {
        let rows = self.prep.trajectories * self.prep.time_len;
        if measurements.shape() != (rows, self.prep.input_width()) {
            return shape_err(format!(
                "expected {rows}x{} readings, got {:?}",
                self.prep.input_width(),
                measurements.shape()
            ));
        }
        self.measurements = Some(measurements);
        Ok(())
    }

    pub fn preprocessing(&self) -> &Preprocessing {
        &self.prep
    }

    pub fn model(&self) -> &ShredModel {
        &self.model
    }

    pub fn latent_dim(&self) -> usize {
        self.model.latent_dim()
    }

    fn windows(&self, measurements: &Matrix) -> Result<Sequences> {
        if measurements.cols() != self.prep.input_width() {
            return shape_err(format!(
                "expected readings from {} sensors, got {}",
                self.prep.input_width(),
                measurements.cols()
            ));
        }
        if !measurements.is_finite() {
            return Err(ShredError::NonFinite(
                "sensor readings contain NaN or infinity".into(),
            ));
        }
        let scaled = self.prep.sensor_scaler.apply(measurements)?;
        if self.prep.parametric {
            let t = self.prep.time_len;
            if !measurements.rows().is_multiple_of(t) {
                return shape_err(format!(
                    "parametric readings must stack whole trajectories of {t} steps, got {} rows",
                    measurements.rows()
                ));
            }
            let parts = (0..measurements.rows() / t)
                .map(|r| {
                    let rows: Vec<usize> = (r * t..(r + 1) * t).collect();
                    Ok(build_lagged_sequences(&scaled.select_rows(&rows), self.prep.lags)?.0)
                })
                .collect::<Result<Vec<_>>>()?;
            Sequences::concat(&parts)
        } else {
            Ok(build_lagged_sequences(&scaled, self.prep.lags)?.0)
        }
    }

    /// One latent per reading row. Parametric engines take whole
    /// trajectories stacked in time and restart the window padding at each.
    pub fn sensor_to_latent(&self, measurements: &Matrix) -> Result<Matrix> {
        self.model.encode(&self.windows(measurements)?)
    }

    /// Per-trajectory latents for parametric readings shaped like the
    /// training data (`trajectories · T` rows).
    pub fn sensor_to_latent_per_trajectory(&self, measurements: &Matrix) -> Result<Vec<Matrix>> {
        let z = self.sensor_to_latent(measurements)?;
        let t = if self.prep.parametric {
            self.prep.time_len
        } else {
            z.rows().max(1)
        };
        Ok((0..z.rows() / t)
            .map(|r| z.select_rows(&(r * t..(r + 1) * t).collect::<Vec<_>>()))
            .collect())
    }

    pub fn forecast_latent(&self, seed: &Matrix, horizon: usize) -> Result<Matrix> {
        if self.prep.parametric {
            return Err(ShredError::Unsupported(
                "forecasting unsupported in parametric regime".into(),
            ));
        }
        if seed.cols() != self.latent_dim() {
            return shape_err(format!(
                "seed latents have width {}, model uses {}",
                seed.cols(),
                self.latent_dim()
            ));
        }
        self.model.forecaster().forecast(seed, horizon)
    }

    /// Splits decoder outputs into per-field blocks (still scaled and compressed).
    pub fn separate(&self, outputs: &Matrix) -> Result<Vec<Matrix>> {
        if outputs.cols() != self.prep.output_width() {
            return shape_err(format!(
                "expected {} output columns, got {}",
                self.prep.output_width(),
                outputs.cols()
            ));
        }
        let mut start = 0;
        Ok(self
            .prep
            .field_widths()
            .into_iter()
            .map(|w| {
                let block = outputs.col_block(start, w);
                start += w;
                block
            })
            .collect())
    }

    pub fn decode(&self, latents: &Matrix) -> Result<FieldReconstruction> {
        if !latents.is_finite() {
            return Err(ShredError::NonFinite(
                "latents contain NaN or infinity".into(),
            ));
        }
        let outputs = self.model.network().decode(latents)?;
        let blocks = self.separate(&outputs)?;
        let n = latents.rows();
        let fields = self
            .prep
            .fields
            .iter()
            .zip(blocks)
            .map(|(meta, block)| {
                let snapshots = meta.codec.decode(&block)?;
                let mut shape = vec![n];
                shape.extend_from_slice(&meta.spatial_shape);
                Ok((meta.id.clone(), FieldArray::from_matrix(snapshots, shape)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldReconstruction { fields })
    }

    /// Physical-space reconstruction of one partition from the stored readings.
    pub fn reconstruct_split(&self, split: Split) -> Result<FieldReconstruction> {
        let measurements = self
            .measurements
            .as_ref()
            .ok_or_else(|| ShredError::InvalidArgument("engine has no sensor readings".into()))?;
        let rows = self.prep.sample_rows(split);
        if rows.is_empty() {
            return invalid(format!("{split:?} split is empty"));
        }
        let z = self.sensor_to_latent(measurements)?;
        self.decode(&z.select_rows(&rows))
    }

    /// Per-field physical-space MSE and mean relative error on a partition.
    /// `truth` holds full arrays laid out as they were registered.
    pub fn evaluate(
        &self,
        truth: &[(&str, &FieldArray)],
        split: Split,
    ) -> Result<BTreeMap<String, FieldMetrics>> {
        let lead = if self.prep.parametric { 2 } else { 1 };
        let samples = self.prep.trajectories * self.prep.time_len;
        for (id, arr) in truth {
            let meta = self
                .prep
                .fields
                .iter()
                .find(|m| m.id == *id)
                .ok_or_else(|| ShredError::InvalidArgument(format!("unknown field `{id}`")))?;
            if arr.ndim() < lead
                || arr.shape()[lead..] != meta.spatial_shape[..]
                || arr.shape()[..lead].iter().product::<usize>() != samples
            {
                return shape_err(format!(
                    "truth for `{id}` has shape {:?}, expected {} sample axes of total {samples} then {:?}",
                    arr.shape(),
                    lead,
                    meta.spatial_shape
                ));
            }
        }
        let recon = self.reconstruct_split(split)?;
        let rows = self.prep.sample_rows(split);
        let mut out = BTreeMap::new();
        for (id, arr) in truth {
            let t = arr.select_rows(lead, &rows);
            let pred = recon.get(id).expect("every registered field is decoded");
            let p = pred.to_matrix(1);
            let diff = t.sub(&p)?;
            let mse =
                diff.as_slice().iter().map(|v| v * v).sum::<f64>() / diff.as_slice().len() as f64;
            let (mre, excluded) = mean_relative_error(&t, &p)?;
            out.insert(
                id.to_string(),
                FieldMetrics {
                    mse,
                    mean_relative_error: mre,
                    snapshots: rows.len(),
                    zero_norm_excluded: excluded,
                },
            );
        }
        Ok(out)
    }
}

/// `w = ∂v/∂x − ∂u/∂y` for fields shaped `T × m × n` (rows along y, columns
/// along x). Central differences inside, second-order one-sided at edges.
pub fn vorticity(u: &FieldArray, v: &FieldArray, dx: f64, dy: f64) -> Result<FieldArray> {
    if u.shape() != v.shape() || u.ndim() != 3 {
        return shape_err(format!(
            "u {:?} and v {:?} must share a T x m x n shape",
            u.shape(),
            v.shape()
        ));
    }
    if !(dx > 0.0 && dy > 0.0) {
        return invalid("grid spacings must be positive");
    }
    let (t_len, m, n) = (u.shape()[0], u.shape()[1], u.shape()[2]);
    if m < 2 || n < 2 {
        return invalid("vorticity needs at least 2 points along each axis");
    }
    // derivative of f along an axis of length len at position k with stride
    let deriv = |f: &[f64], base: usize, k: usize, len: usize, stride: usize, h: f64| {
        let at = |j: usize| f[base + j * stride];
        if len == 2 {
            (at(1) - at(0)) / h
        } else if k == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
        } else if k == len - 1 {
            (3.0 * at(len - 1) - 4.0 * at(len - 2) + at(len - 3)) / (2.0 * h)
        } else {
            (at(k + 1) - at(k - 1)) / (2.0 * h)
        }
    };
    let mut w = vec![0.0; t_len * m * n];
    for t in 0..t_len {
        let off = t * m * n;
        for i in 0..m {
            for j in 0..n {
                let dvdx = deriv(v.data(), off + i * n, j, n, 1, dx);
                let dudy = deriv(u.data(), off + j, i, m, n, dy);
                w[off + i * n + j] = dvdx - dudy;
            }
        }
    }
    FieldArray::new(u.shape().to_vec(), w)
}
