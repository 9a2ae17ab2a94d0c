//! The SHRED network: a recurrent encoder mapping sensor windows to a
//! latent state and an MLP decoder mapping the latent state to compressed
//! field targets.

mod mlp;
mod network;
mod optim;
mod recurrent;
mod shred;
mod train;

pub use mlp::{Activation, Dense, Mlp, MlpTrace};
pub use network::{ModelConfig, NetTrace, Network};
pub use optim::Adam;
pub use recurrent::{CellKind, LayerTrace, RecurrentLayer};
pub use shred::ShredModel;
pub use train::{TrainConfig, TrainReport};

pub(crate) use train::{fit_network, Samples};
