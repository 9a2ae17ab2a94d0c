use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{invalid, shape_err, Result};

/// Per-column affine map onto `[0, 1]` learned from fitting data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    range: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(a: &Matrix) -> Result<Self> {
        if a.rows() == 0 {
            return invalid("cannot fit a scaler on zero rows");
        }
        let mut min = a.row(0).to_vec();
        let mut max = min.clone();
        for i in 1..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        // constant columns (e.g. masked pixels) keep a unit range
        let range = min
            .iter()
            .zip(&max)
            .map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
            .collect();
        Ok(Self { min, range })
    }

    /// Scaler that leaves data unchanged.
    pub fn identity(width: usize) -> Self {
        Self {
            min: vec![0.0; width],
            range: vec![1.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, a: &Matrix) -> Result<Matrix> {
        self.check(a)?;
        let mut out = a.clone();
        for i in 0..out.rows() {
            for ((v, lo), r) in out.row_mut(i).iter_mut().zip(&self.min).zip(&self.range) {
                *v = (*v - lo) / r;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, a: &Matrix) -> Result<Matrix> {
        self.check(a)?;
        let mut out = a.clone();
        for i in 0..out.rows() {
            for ((v, lo), r) in out.row_mut(i).iter_mut().zip(&self.min).zip(&self.range) {
                *v = *v * r + lo;
            }
        }
        Ok(out)
    }

    fn check(&self, a: &Matrix) -> Result<()> {
        if a.cols() != self.width() {
            return shape_err(format!(
                "scaler fitted on {} columns applied to {}",
                self.width(),
                a.cols()
            ));
        }
        Ok(())
    }
}
