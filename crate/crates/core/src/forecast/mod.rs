//! Latent forecasters: predict future latent states without new readings.

mod recurrent;
mod sindy;

pub use recurrent::{
    fit_recurrent_forecaster, recurrent_forecast, ForecasterConfig, RecurrentForecaster,
};
pub use sindy::{
    finite_difference, sindy_fit, SindyLibrary, SindyModel, DEFAULT_RIDGE, DEFAULT_THRESHOLD,
};

use crate::error::{invalid, Result, ShredError};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Default)]
pub enum LatentForecaster {
    #[default]
    None,
    Sindy(SindyModel),
    Recurrent(RecurrentForecaster),
}

impl LatentForecaster {
    pub fn dim(&self) -> Option<usize> {
        match self {
            LatentForecaster::None => None,
            LatentForecaster::Sindy(m) => Some(m.dim()),
            LatentForecaster::Recurrent(rf) => Some(rf.dim()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LatentForecaster::None => "none",
            LatentForecaster::Sindy(_) => "sindy",
            LatentForecaster::Recurrent(_) => "recurrent",
        }
    }

    /// Rolls `steps` states forward from the end of `seed`. SINDy starts from
    /// the last row; the recurrent forecaster uses the last `window` rows.
    pub fn forecast(&self, seed: &Matrix, steps: usize) -> Result<Matrix> {
        match self {
            LatentForecaster::None => Err(ShredError::InvalidArgument(
                "no latent forecaster attached".into(),
            )),
            LatentForecaster::Sindy(m) => {
                if seed.rows() == 0 {
                    return invalid("SINDy forecast needs at least one seed latent");
                }
                m.forecast(seed.row(seed.rows() - 1), steps)
            }
            LatentForecaster::Recurrent(rf) => {
                if seed.rows() < rf.window {
                    return invalid(format!(
                        "recurrent forecast needs {} seed latents, got {}",
                        rf.window,
                        seed.rows()
                    ));
                }
                let tail: Vec<usize> = (seed.rows() - rf.window..seed.rows()).collect();
                rf.forecast(&seed.select_rows(&tail), steps)
            }
        }
    }
}
