//! Model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! | bytes      | content                                               |
//! |------------|-------------------------------------------------------|
//! | 4          | magic `SHRD`                                          |
//! | 4          | format version (u32, currently 1)                     |
//! | 4 + len    | architecture descriptor: u32 length, UTF-8 JSON       |
//! | 8          | weight count (u64)                                    |
//! | 8 per item | f64 weights                                           |
//!
//! Weights follow the declared order: for each recurrent layer `w_ih, w_hh,
//! b_ih, b_hh`, then `w, b` for each decoder layer, then the forecaster
//! (SINDy coefficients row-major, or the recurrent forecaster's network in
//! the same order as above).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bytes::*;
use crate::error::{Result, ShredError};
use crate::forecast::{LatentForecaster, RecurrentForecaster, SindyLibrary, SindyModel};
use crate::linalg::Matrix;
use crate::model::{ModelConfig, Network, ShredModel};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SHRD";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Descriptor {
    model: ModelConfig,
    forecaster: ForecasterDescriptor,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ForecasterDescriptor {
    None,
    Sindy {
        library: SindyLibrary,
        dt: f64,
        threshold: f64,
        active: Vec<bool>,
    },
    Recurrent {
        config: ModelConfig,
        window: usize,
    },
}

fn flatten(net: &Network, out: &mut Vec<f64>) {
    for p in net.params() {
        out.extend_from_slice(p);
    }
}

fn fill(net: &mut Network, values: &mut std::slice::Iter<'_, f64>) -> Result<()> {
    for p in net.params_mut() {
        for slot in p.iter_mut() {
            *slot = *values.next().ok_or_else(|| {
                ShredError::Format("checkpoint holds fewer weights than its architecture".into())
            })?;
        }
    }
    Ok(())
}

pub fn write_checkpoint(w: &mut impl Write, model: &ShredModel) -> Result<()> {
    let mut weights = Vec::new();
    flatten(model.network(), &mut weights);
    let forecaster = match model.forecaster() {
        LatentForecaster::None => ForecasterDescriptor::None,
        LatentForecaster::Sindy(m) => {
            weights.extend_from_slice(m.coefficients.as_slice());
            ForecasterDescriptor::Sindy {
                library: m.library.clone(),
                dt: m.dt,
                threshold: m.threshold,
                active: m.active.clone(),
            }
        }
        LatentForecaster::Recurrent(rf) => {
            flatten(&rf.net, &mut weights);
            ForecasterDescriptor::Recurrent {
                config: rf.config.clone(),
                window: rf.window,
            }
        }
    };
    let descriptor = serde_json::to_string(&Descriptor {
        model: model.config().clone(),
        forecaster,
    })
    .map_err(|e| ShredError::Format(format!("cannot encode descriptor: {e}")))?;
    w.write_all(CHECKPOINT_MAGIC)?;
    put_u32(w, CHECKPOINT_VERSION)?;
    put_str(w, &descriptor)?;
    put_u64(w, weights.len() as u64)?;
    put_f64s(w, &weights)
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<ShredModel> {
    get_magic(r, CHECKPOINT_MAGIC, "checkpoint")?;
    let version = get_u32(r, "version")?;
    if version != CHECKPOINT_VERSION {
        return Err(ShredError::Version {
            what: "checkpoint",
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let text = get_str(r, "architecture descriptor")?;
    let desc: Descriptor = serde_json::from_str(&text)
        .map_err(|e| ShredError::Format(format!("bad architecture descriptor: {e}")))?;
    let count = get_u64(r, "weight count")?;
    let count =
        usize::try_from(count).map_err(|_| ShredError::Format("weight count overflows".into()))?;
    let weights = get_f64s(r, count, "weights")?;
    expect_end(r, "checkpoint")?;

    let mut values = weights.iter();
    let mut net = Network::init(&desc.model)?;
    fill(&mut net, &mut values)?;
    let forecaster = match desc.forecaster {
        ForecasterDescriptor::None => LatentForecaster::None,
        ForecasterDescriptor::Sindy {
            library,
            dt,
            threshold,
            active,
        } => {
            let mut m = SindyModel::new(library, dt, threshold)?;
            let (p, h) = m.coefficients.shape();
            if active.len() != p * h {
                return Err(ShredError::Format(
                    "SINDy mask does not match its library".into(),
                ));
            }
            let xi: Vec<f64> = values.by_ref().take(p * h).copied().collect();
            if xi.len() != p * h {
                return Err(ShredError::Format(
                    "checkpoint is missing SINDy coefficients".into(),
                ));
            }
            m.coefficients = Matrix::from_vec(p, h, xi)?;
            m.active = active;
            LatentForecaster::Sindy(m)
        }
        ForecasterDescriptor::Recurrent { config, window } => {
            let mut fnet = Network::init(&config)?;
            fill(&mut fnet, &mut values)?;
            LatentForecaster::Recurrent(RecurrentForecaster {
                config,
                net: fnet,
                window,
            })
        }
    };
    if values.next().is_some() {
        return Err(ShredError::Format(
            "checkpoint holds more weights than its architecture".into(),
        ));
    }
    ShredModel::from_parts(desc.model, net, forecaster)
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &ShredModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, model)?;
    Ok(w.flush()?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ShredModel> {
    read_checkpoint(&mut BufReader::new(File::open(path)?))
}
