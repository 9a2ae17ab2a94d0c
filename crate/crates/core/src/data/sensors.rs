use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::array::FieldArray;
use crate::error::{invalid, shape_err, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Where one sensor reads its field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SensorLocation {
    /// Fixed spatial multi-index.
    Stationary(Vec<usize>),
    /// One spatial multi-index per time step.
    Mobile(Vec<Vec<usize>>),
    /// Readings were supplied directly rather than sampled from the field.
    External,
}

/// A sensor bound to the field it samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub field: String,
    pub location: SensorLocation,
}

/// How `add_data` obtains sensor readings for a field.
#[derive(Clone, Debug, PartialEq)]
pub enum SensorSource {
    None,
    /// `count` stationary sensors drawn uniformly without replacement.
    Random {
        count: usize,
        seed: u64,
    },
    Explicit(Vec<SensorLocation>),
    /// Readings already measured, one row per sample (trajectory-major for
    /// parametric data).
    Measurements(Matrix),
}

/// Draws `count` distinct stationary locations on a grid.
pub fn random_locations(
    spatial_shape: &[usize],
    count: usize,
    seed: u64,
) -> Result<Vec<SensorLocation>> {
    let total: usize = spatial_shape.iter().product();
    if count > total {
        return invalid(format!(
            "cannot place {count} distinct sensors on {total} grid points"
        ));
    }
    let mut r = rng::seeded(seed);
    let picks = index::sample(&mut r, total, count);
    Ok(picks
        .iter()
        .map(|flat| SensorLocation::Stationary(unflatten(flat, spatial_shape)))
        .collect())
}

/// Circular path `center + radius·(sin(step·t), cos(step·t))`, truncated toward zero.
pub fn circular_trajectory(
    center: (f64, f64),
    radius: f64,
    step: f64,
    len: usize,
) -> SensorLocation {
    SensorLocation::Mobile(
        (0..len)
            .map(|t| {
                let a = step * t as f64;
                let i = center.0 + radius * a.sin();
                let j = center.1 + radius * (a + std::f64::consts::FRAC_PI_2).sin();
                vec![i.max(0.0) as usize, j.max(0.0) as usize]
            })
            .collect(),
    )
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (k, &n) in shape.iter().enumerate().rev() {
        idx[k] = flat % n;
        flat /= n;
    }
    idx
}

fn flat_index(coord: &[usize], shape: &[usize]) -> Result<usize> {
    if coord.len() != shape.len() {
        return invalid(format!(
            "coordinate {coord:?} has {} axes, field has {}",
            coord.len(),
            shape.len()
        ));
    }
    let mut flat = 0;
    for (&c, &n) in coord.iter().zip(shape) {
        if c >= n {
            return invalid(format!(
                "sensor coordinate {coord:?} outside spatial shape {shape:?}"
            ));
        }
        flat = flat * n + c;
    }
    Ok(flat)
}

/// Checks a location against the spatial shape and time length.
pub fn validate_location(
    loc: &SensorLocation,
    spatial_shape: &[usize],
    time_len: usize,
) -> Result<()> {
    match loc {
        SensorLocation::Stationary(c) => flat_index(c, spatial_shape).map(|_| ()),
        SensorLocation::Mobile(path) => {
            if path.len() != time_len {
                return shape_err(format!(
                    "mobile trajectory has {} positions, series has {time_len} steps",
                    path.len()
                ));
            }
            path.iter()
                .try_for_each(|c| flat_index(c, spatial_shape).map(|_| ()))
        }
        SensorLocation::External => invalid("external sensors cannot be sampled from a field"),
    }
}

/// Samples `data` (time × spatial…) at the given sensors: entry `(t, j)` is
/// the field at sensor `j`'s position at time `t`.
pub fn extract_measurements(data: &FieldArray, sensors: &[SensorLocation]) -> Result<Matrix> {
    if data.ndim() < 2 {
        return shape_err("field must have a time axis and at least one spatial axis");
    }
    let time_len = data.shape()[0];
    let spatial = &data.shape()[1..];
    let size = data.trailing_size(1);
    for s in sensors {
        validate_location(s, spatial, time_len)?;
    }
    let values = data.data();
    let mut out = Matrix::zeros(time_len, sensors.len());
    for (j, s) in sensors.iter().enumerate() {
        for t in 0..time_len {
            let flat = match s {
                SensorLocation::Stationary(c) => flat_index(c, spatial)?,
                SensorLocation::Mobile(path) => flat_index(&path[t], spatial)?,
                SensorLocation::External => unreachable!("rejected above"),
            };
            out.set(t, j, values[t * size + flat]);
        }
    }
    Ok(out)
}
