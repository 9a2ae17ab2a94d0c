//! Dense numeric kernels shared by the rest of the crate.

mod fourier;
mod matrix;
mod ridge;
mod scaler;
mod svd;

pub use fourier::{fourier_reconstruct, fourier_truncate, FourierTruncation};
pub use matrix::Matrix;
pub(crate) use matrix::{gemm_nn, gemm_nt, gemm_tn};
pub use ridge::ridge_solve;
pub use scaler::MinMaxScaler;
pub use svd::{randomized_svd, SvdFactors, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS};
