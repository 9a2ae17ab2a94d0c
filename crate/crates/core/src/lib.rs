//! Shallow recurrent decoders (SHRED).
//!
//! A recurrent encoder maps a short history of sparse sensor readings to a
//! latent vector and a shallow decoder maps the latent vector to the full
//! state, usually in a compressed (POD or truncated Fourier) basis. The crate
//! covers the whole pipeline: [`data::DataManager`] prepares lagged sensor
//! sequences and targets, [`model::ShredModel`] is trained on them,
//! [`engine::Engine`] reconstructs, forecasts and evaluates in physical
//! space, and [`forecast`] holds the latent forecasters (recurrent rollout
//! and SINDy).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod engine;
pub mod error;
pub mod forecast;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod synthetic;

pub mod cli;
pub mod config;

pub use error::{Result, ShredError};
pub use linalg::Matrix;
