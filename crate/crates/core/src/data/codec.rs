use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result};
use crate::linalg::{
    fourier_reconstruct, fourier_truncate, randomized_svd, FourierTruncation, Matrix, MinMaxScaler,
    DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS,
};

/// Requested compression for a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Compression {
    None,
    /// Keep `k` POD modes from a randomized SVD of the training snapshots.
    Svd(usize),
    /// Keep wavenumbers `|k_x| ≤ kx`, `|k_y| ≤ ky` of a 2-D grid.
    Fourier {
        kx: usize,
        ky: usize,
    },
}

/// Fitted compressor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Compressor {
    None,
    /// Coefficients are projections onto the columns of `basis` (space × k).
    Svd {
        basis: Matrix,
        singular_values: Vec<f64>,
    },
    /// Coefficients are the real parts followed by the imaginary parts of the
    /// retained DFT coefficients.
    Fourier(FourierTruncation),
}

/// Compression followed by min-max scaling, fitted on training snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCodec {
    spatial_size: usize,
    compressor: Compressor,
    scaler: MinMaxScaler,
}

impl FieldCodec {
    /// `spatial_shape` is needed for Fourier compression, which requires a 2-D grid.
    pub fn fit(
        train_snapshots: &Matrix,
        spatial_shape: &[usize],
        compression: Compression,
        seed: u64,
    ) -> Result<Self> {
        let size = train_snapshots.cols();
        if spatial_shape.iter().product::<usize>() != size {
            return shape_err("spatial shape disagrees with snapshot width");
        }
        let compressor = match compression {
            Compression::None => Compressor::None,
            Compression::Svd(k) => {
                let limit = train_snapshots.rows().min(size);
                if k == 0 || k > limit {
                    return invalid(format!(
                        "cannot keep {k} modes from {} training snapshots of size {size}",
                        train_snapshots.rows()
                    ));
                }
                let f = randomized_svd(
                    train_snapshots,
                    k,
                    DEFAULT_OVERSAMPLE,
                    DEFAULT_POWER_ITERS,
                    seed,
                )?;
                Compressor::Svd {
                    basis: f.v,
                    singular_values: f.s,
                }
            }
            Compression::Fourier { kx, ky } => {
                let [m, n] = spatial_shape else {
                    return invalid(format!(
                        "Fourier compression needs a 2-D grid, field has shape {spatial_shape:?}"
                    ));
                };
                Compressor::Fourier(FourierTruncation::new(*m, *n, kx, ky)?)
            }
        };
        let mut codec = Self {
            spatial_size: size,
            compressor,
            scaler: MinMaxScaler::identity(0),
        };
        codec.scaler = MinMaxScaler::fit(&codec.compress(train_snapshots)?)?;
        Ok(codec)
    }

    pub fn spatial_size(&self) -> usize {
        self.spatial_size
    }

    pub fn compressor(&self) -> &Compressor {
        &self.compressor
    }

    pub fn scaler(&self) -> &MinMaxScaler {
        &self.scaler
    }

    /// Width of the encoded representation.
    pub fn latent_width(&self) -> usize {
        match &self.compressor {
            Compressor::None => self.spatial_size,
            Compressor::Svd { basis, .. } => basis.cols(),
            Compressor::Fourier(t) => 2 * t.retained(),
        }
    }

    pub fn compress(&self, snapshots: &Matrix) -> Result<Matrix> {
        if snapshots.cols() != self.spatial_size {
            return shape_err(format!(
                "codec expects snapshots of size {}, got {}",
                self.spatial_size,
                snapshots.cols()
            ));
        }
        match &self.compressor {
            Compressor::None => Ok(snapshots.clone()),
            Compressor::Svd { basis, .. } => snapshots.matmul(basis),
            Compressor::Fourier(t) => {
                let (re, im) = fourier_truncate(snapshots, t)?;
                Matrix::hstack(&[&re, &im])
            }
        }
    }

    pub fn decompress(&self, coeffs: &Matrix) -> Result<Matrix> {
        if coeffs.cols() != self.latent_width() {
            return shape_err(format!(
                "codec expects {} coefficients, got {}",
                self.latent_width(),
                coeffs.cols()
            ));
        }
        match &self.compressor {
            Compressor::None => Ok(coeffs.clone()),
            Compressor::Svd { basis, .. } => coeffs.matmul_t(basis),
            Compressor::Fourier(t) => {
                let k = t.retained();
                fourier_reconstruct(&coeffs.col_block(0, k), &coeffs.col_block(k, k), t)
            }
        }
    }

    pub fn encode(&self, snapshots: &Matrix) -> Result<Matrix> {
        self.scaler.apply(&self.compress(snapshots)?)
    }

    pub fn decode(&self, encoded: &Matrix) -> Result<Matrix> {
        self.decompress(&self.scaler.invert(encoded)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncompressed_round_trip_is_exact() {
        let x = Matrix::from_fn(6, 4, |i, j| (i * 4 + j) as f64 * 0.25 - 1.0);
        let c = FieldCodec::fit(&x, &[2, 2], Compression::None, 0).unwrap();
        assert_eq!(c.latent_width(), 4);
        let back = c.decode(&c.encode(&x).unwrap()).unwrap();
        assert!(back.sub(&x).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn svd_round_trip_on_low_rank_data() {
        let x = Matrix::from_fn(30, 20, |i, j| {
            let (a, b) = (i as f64 * 0.1, j as f64 * 0.3);
            a.sin() * b.cos() + 0.5 * (2.0 * a).cos() * (b * b).sin()
        });
        let c = FieldCodec::fit(&x, &[4, 5], Compression::Svd(2), 1).unwrap();
        assert_eq!(c.latent_width(), 2);
        let back = c.decode(&c.encode(&x).unwrap()).unwrap();
        assert!(back.sub(&x).unwrap().frobenius_norm() <= 1e-8 * x.frobenius_norm());
    }

    #[test]
    fn fourier_width_and_full_round_trip() {
        let x = Matrix::from_fn(3, 12, |i, j| ((i + 2 * j) % 5) as f64);
        let c = FieldCodec::fit(&x, &[3, 4], Compression::Fourier { kx: 2, ky: 1 }, 0).unwrap();
        assert_eq!(c.latent_width(), 24);
        let back = c.decode(&c.encode(&x).unwrap()).unwrap();
        assert!(back.sub(&x).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_requests() {
        let x = Matrix::zeros(3, 6);
        assert!(FieldCodec::fit(&x, &[6], Compression::Svd(4), 0).is_err());
        assert!(FieldCodec::fit(&x, &[6], Compression::Fourier { kx: 1, ky: 1 }, 0).is_err());
        assert!(FieldCodec::fit(&x, &[5], Compression::None, 0).is_err());
    }
}
