//! C ABI over the `shred` library.
//!
//! Every fallible function returns a [`ShredStatus`]. On failure the message
//! is kept per thread and can be read with [`shred_last_error`]. Objects are
//! opaque handles created by `*_new`/`*_load` and released with `*_free`.
//! Array arguments are row-major `f64` buffers; outputs go to caller-owned
//! buffers whose required length can be queried up front.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use shred::data::{
    Compression, DataManager, FieldArray, ManagerConfig, PreparedDatasets, Preprocessing,
    SensorLocation, SensorSource,
};
use shred::engine::Engine;
use shred::io::{load_checkpoint, save_checkpoint};
use shred::model::{Activation, CellKind, ModelConfig, TrainConfig};
use shred::{Matrix, ShredError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShredStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    NonFinite = 4,
    Singular = 5,
    Numeric = 6,
    Divergence = 7,
    Unsupported = 8,
    Format = 9,
    Version = 10,
    Config = 11,
    Io = 12,
    /// A Rust panic was caught at the boundary. The handle involved should
    /// be treated as unusable.
    Panic = 13,
}

impl From<&ShredError> for ShredStatus {
    fn from(e: &ShredError) -> Self {
        match e {
            ShredError::Shape(_) => Self::Shape,
            ShredError::InvalidArgument(_) => Self::InvalidArgument,
            ShredError::NonFinite(_) => Self::NonFinite,
            ShredError::Singular(_) => Self::Singular,
            ShredError::Numeric(_) => Self::Numeric,
            ShredError::Divergence { .. } => Self::Divergence,
            ShredError::Unsupported(_) => Self::Unsupported,
            ShredError::Format(_) => Self::Format,
            ShredError::Version { .. } => Self::Version,
            ShredError::Config { .. } => Self::Config,
            ShredError::Io(_) => Self::Io,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShredCell {
    Gru = 0,
    Lstm = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShredActivation {
    Relu = 0,
    Tanh = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShredCompressionKind {
    None = 0,
    /// Randomized SVD; uses `modes`.
    Svd = 1,
    /// Low-frequency 2-D Fourier truncation; uses `kx` and `ky`.
    Fourier = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShredCompression {
    pub kind: ShredCompressionKind,
    pub modes: usize,
    pub kx: usize,
    pub ky: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShredSensorKind {
    /// The field is a reconstruction target only.
    None = 0,
    /// `count` distinct random grid points drawn with `seed`.
    Random = 1,
    /// `count` fixed grid points; `locations` holds `count × spatial_ndim`
    /// indices, one row per sensor.
    Stationary = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShredSensors {
    pub kind: ShredSensorKind,
    pub count: usize,
    pub seed: u64,
    pub locations: *const usize,
}

/// Training settings. Start from [`shred_train_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShredTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub seed: u64,
    pub sindy_regularization: f64,
    pub sindy_thres_epoch: usize,
    pub sindy_threshold: f64,
    pub sindy_ridge: f64,
}

impl From<&ShredTrainConfig> for TrainConfig {
    fn from(c: &ShredTrainConfig) -> Self {
        TrainConfig {
            epochs: c.epochs,
            batch_size: c.batch_size,
            learning_rate: c.learning_rate,
            patience: c.patience,
            seed: c.seed,
            sindy_regularization: c.sindy_regularization,
            sindy_thres_epoch: c.sindy_thres_epoch,
            sindy_threshold: c.sindy_threshold,
            sindy_ridge: c.sindy_ridge,
        }
    }
}

/// Data manager plus the datasets from its last `prepare`.
pub struct ShredManager {
    inner: DataManager,
    prepared: Option<PreparedDatasets>,
}

pub struct ShredModel {
    inner: shred::model::ShredModel,
}

pub struct ShredEngine {
    inner: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Lib(ShredError),
}

impl From<ShredError> for Failure {
    fn from(e: ShredError) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<(), Failure>;

/// Runs `f`, recording any error or panic for [`shred_last_error`].
fn guard(f: impl FnOnce() -> Outcome) -> ShredStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShredStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            ShredStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            ShredStatus::from(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            ShredStatus::Panic
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Lib(ShredError::InvalidArgument(msg.into()))
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn string_in(p: *const c_char, what: &'static str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T, what: &'static str) -> Outcome {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies `m` into a caller buffer of `cap` entries.
unsafe fn copy_matrix(m: &Matrix, out: *mut f64, cap: usize) -> Outcome {
    copy_values(m.as_slice(), out, cap)
}

unsafe fn copy_values(values: &[f64], out: *mut f64, cap: usize) -> Outcome {
    if cap < values.len() {
        return Err(ShredError::Shape(format!(
            "output buffer holds {cap} values, {} needed",
            values.len()
        ))
        .into());
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn matrix_in(
    p: *const f64,
    rows: usize,
    cols: usize,
    what: &'static str,
) -> Result<Matrix, Failure> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| invalid(format!("`{what}` dimensions overflow")))?;
    Ok(Matrix::from_vec(
        rows,
        cols,
        slice_in(p, len, what)?.to_vec(),
    )?)
}

/// Message for the most recent failure on this thread, or NULL if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn shred_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn shred_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn shred_train_config_default() -> ShredTrainConfig {
    let d = TrainConfig::default();
    ShredTrainConfig {
        epochs: d.epochs,
        batch_size: d.batch_size,
        learning_rate: d.learning_rate,
        patience: d.patience,
        seed: d.seed,
        sindy_regularization: d.sindy_regularization,
        sindy_thres_epoch: d.sindy_thres_epoch,
        sindy_threshold: d.sindy_threshold,
        sindy_ridge: d.sindy_ridge,
    }
}

/// Creates a manager. Split fractions must sum to 1. `parametric` data is
/// shaped `trajectories × T × spatial...` and split by whole trajectories
/// drawn with `seed`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn shred_manager_new(
    lags: usize,
    train_size: f64,
    val_size: f64,
    test_size: f64,
    parametric: bool,
    seed: u64,
    out: *mut *mut ShredManager,
) -> ShredStatus {
    guard(|| {
        let mut cfg = ManagerConfig::new(lags, train_size, val_size, test_size).with_seed(seed);
        if parametric {
            cfg = cfg.parametric();
        }
        let inner = DataManager::new(cfg)?;
        write_out(
            out,
            ShredManager {
                inner,
                prepared: None,
            },
            "out",
        )
    })
}

/// Registers a field. `data` holds `prod(shape)` values.
///
/// # Safety
/// Pointers must be valid for the lengths implied by `ndim`, `shape` and
/// `sensors`; `id` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn shred_manager_add_field(
    manager: *mut ShredManager,
    id: *const c_char,
    data: *const f64,
    shape: *const usize,
    ndim: usize,
    sensors: ShredSensors,
    compression: ShredCompression,
) -> ShredStatus {
    guard(|| {
        let m = get_mut(manager, "manager")?;
        let id = string_in(id, "id")?;
        let shape = slice_in(shape, ndim, "shape")?.to_vec();
        let len = shape
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(*d))
            .ok_or_else(|| invalid("shape overflows"))?;
        let array = FieldArray::new(shape.clone(), slice_in(data, len, "data")?.to_vec())?;
        let lead = if m.inner.is_parametric() { 2 } else { 1 };
        let spatial = ndim.saturating_sub(lead).max(1);
        let source = match sensors.kind {
            ShredSensorKind::None => SensorSource::None,
            ShredSensorKind::Random => SensorSource::Random {
                count: sensors.count,
                seed: sensors.seed,
            },
            ShredSensorKind::Stationary => {
                let flat = slice_in(
                    sensors.locations,
                    sensors.count * spatial,
                    "sensors.locations",
                )?;
                SensorSource::Explicit(
                    flat.chunks(spatial)
                        .map(|c| SensorLocation::Stationary(c.to_vec()))
                        .collect(),
                )
            }
        };
        let compress = match compression.kind {
            ShredCompressionKind::None => Compression::None,
            ShredCompressionKind::Svd => Compression::Svd(compression.modes),
            ShredCompressionKind::Fourier => Compression::Fourier {
                kx: compression.kx,
                ky: compression.ky,
            },
        };
        m.inner.add_data(array, &id, source, compress)?;
        m.prepared = None;
        Ok(())
    })
}

/// Adds Gaussian noise with standard deviation `std` to the sensor readings.
///
/// # Safety
/// `manager` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn shred_manager_inject_noise(
    manager: *mut ShredManager,
    std: f64,
    seed: u64,
) -> ShredStatus {
    guard(|| {
        let m = get_mut(manager, "manager")?;
        m.inner.inject_noise(std, seed)?;
        m.prepared = None;
        Ok(())
    })
}

/// Fits scalers and builds the train/val/test datasets.
///
/// # Safety
/// `manager` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn shred_manager_prepare(manager: *mut ShredManager) -> ShredStatus {
    guard(|| {
        let m = get_mut(manager, "manager")?;
        m.prepared = Some(m.inner.prepare()?);
        Ok(())
    })
}

/// Number of sensor columns (the model input width).
///
/// # Safety
/// `manager` must be a live handle or NULL; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shred_manager_input_width(
    manager: *const ShredManager,
    out: *mut usize,
) -> ShredStatus {
    guard(|| {
        let m = get(manager, "manager")?;
        *get_mut(out, "out")? = m.inner.sensors().len();
        Ok(())
    })
}

/// Width of the concatenated compressed targets (the model output width).
/// Requires a prepared manager.
///
/// # Safety
/// `manager` must be a live handle or NULL; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shred_manager_output_width(
    manager: *const ShredManager,
    out: *mut usize,
) -> ShredStatus {
    guard(|| {
        let m = get(manager, "manager")?;
        *get_mut(out, "out")? = m.inner.preprocessing()?.output_width();
        Ok(())
    })
}

/// # Safety
/// `manager` must come from [`shred_manager_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn shred_manager_free(manager: *mut ShredManager) {
    if !manager.is_null() {
        drop(Box::from_raw(manager));
    }
}

/// Creates an untrained model. `decoder_layers` lists hidden widths.
///
/// # Safety
/// `decoder_layers` must hold `n_decoder_layers` entries; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn shred_model_new(
    cell: ShredCell,
    input_size: usize,
    hidden_size: usize,
    num_layers: usize,
    decoder_layers: *const usize,
    n_decoder_layers: usize,
    activation: ShredActivation,
    output_size: usize,
    seed: u64,
    out: *mut *mut ShredModel,
) -> ShredStatus {
    guard(|| {
        let cfg = ModelConfig {
            cell: match cell {
                ShredCell::Gru => CellKind::Gru,
                ShredCell::Lstm => CellKind::Lstm,
            },
            input_size,
            hidden_size,
            num_layers,
            decoder_layers: slice_in(decoder_layers, n_decoder_layers, "decoder_layers")?.to_vec(),
            activation: match activation {
                ShredActivation::Relu => Activation::Relu,
                ShredActivation::Tanh => Activation::Tanh,
            },
            output_size,
            seed,
        };
        let inner = shred::model::ShredModel::new(cfg)?;
        write_out(out, ShredModel { inner }, "out")
    })
}

/// Trains on a prepared manager's datasets. Writes the best validation MSE
/// to `val_mse` when it is not NULL.
///
/// # Safety
/// Handles must be live; `config` must point to a valid struct.
#[no_mangle]
pub unsafe extern "C" fn shred_model_fit(
    model: *mut ShredModel,
    manager: *const ShredManager,
    config: *const ShredTrainConfig,
    val_mse: *mut f64,
) -> ShredStatus {
    guard(|| {
        let model = get_mut(model, "model")?;
        let m = get(manager, "manager")?;
        let cfg = TrainConfig::from(get(config, "config")?);
        let data = m
            .prepared
            .as_ref()
            .ok_or_else(|| invalid("call shred_manager_prepare before training"))?;
        let report = model.inner.fit(&data.train, &data.val, &cfg)?;
        if let Some(v) = val_mse.as_mut() {
            *v = report.val_mse;
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn shred_model_save(
    model: *const ShredModel,
    path: *const c_char,
) -> ShredStatus {
    guard(|| {
        let model = get(model, "model")?;
        save_checkpoint(PathBuf::from(string_in(path, "path")?), &model.inner)?;
        Ok(())
    })
}

/// # Safety
/// `path` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_model_load(
    path: *const c_char,
    out: *mut *mut ShredModel,
) -> ShredStatus {
    guard(|| {
        let inner = load_checkpoint(PathBuf::from(string_in(path, "path")?))?;
        write_out(out, ShredModel { inner }, "out")
    })
}

/// # Safety
/// `model` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_model_latent_dim(
    model: *const ShredModel,
    out: *mut usize,
) -> ShredStatus {
    guard(|| {
        *get_mut(out, "out")? = get(model, "model")?.inner.latent_dim();
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn shred_model_free(model: *mut ShredModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Builds an engine from a prepared manager and a copy of `model`. The
/// engine does not borrow either handle.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_new(
    manager: *const ShredManager,
    model: *const ShredModel,
    out: *mut *mut ShredEngine,
) -> ShredStatus {
    guard(|| {
        let m = get(manager, "manager")?;
        let model = get(model, "model")?;
        let inner = Engine::from_manager(&m.inner, model.inner.clone())?;
        write_out(out, ShredEngine { inner }, "out")
    })
}

/// Builds an engine from a checkpoint and the `preprocessing.json` written
/// next to it by the command-line `train`.
///
/// # Safety
/// Paths NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_load(
    checkpoint: *const c_char,
    preprocessing: *const c_char,
    out: *mut *mut ShredEngine,
) -> ShredStatus {
    guard(|| {
        let model = load_checkpoint(PathBuf::from(string_in(checkpoint, "checkpoint")?))?;
        let text = std::fs::read_to_string(string_in(preprocessing, "preprocessing")?)
            .map_err(ShredError::from)?;
        let prep: Preprocessing = serde_json::from_str(&text)
            .map_err(|e| ShredError::Format(format!("preprocessing file: {e}")))?;
        let inner = Engine::new(prep, model)?;
        write_out(out, ShredEngine { inner }, "out")
    })
}

/// # Safety
/// `engine` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_latent_dim(
    engine: *const ShredEngine,
    out: *mut usize,
) -> ShredStatus {
    guard(|| {
        *get_mut(out, "out")? = get(engine, "engine")?.inner.latent_dim();
        Ok(())
    })
}

/// Number of sensor columns the engine expects.
///
/// # Safety
/// `engine` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_input_width(
    engine: *const ShredEngine,
    out: *mut usize,
) -> ShredStatus {
    guard(|| {
        *get_mut(out, "out")? = get(engine, "engine")?.inner.preprocessing().input_width();
        Ok(())
    })
}

/// # Safety
/// `engine` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_field_count(
    engine: *const ShredEngine,
    out: *mut usize,
) -> ShredStatus {
    guard(|| {
        *get_mut(out, "out")? = get(engine, "engine")?.inner.preprocessing().fields.len();
        Ok(())
    })
}

/// Number of spatial points in field `index` (values per decoded snapshot).
///
/// # Safety
/// `engine` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_field_size(
    engine: *const ShredEngine,
    index: usize,
    out: *mut usize,
) -> ShredStatus {
    guard(|| {
        let e = get(engine, "engine")?;
        let field = e
            .inner
            .preprocessing()
            .fields
            .get(index)
            .ok_or_else(|| invalid(format!("field index {index} out of range")))?;
        *get_mut(out, "out")? = field.spatial_shape.iter().product();
        Ok(())
    })
}

/// Maps `rows × cols` raw readings to `rows × latent_dim` latents.
///
/// # Safety
/// `readings` must hold `rows · cols` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_sensor_to_latent(
    engine: *const ShredEngine,
    readings: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    out_len: usize,
) -> ShredStatus {
    guard(|| {
        let e = get(engine, "engine")?;
        let z = e
            .inner
            .sensor_to_latent(&matrix_in(readings, rows, cols, "readings")?)?;
        copy_matrix(&z, out, out_len)
    })
}

/// Decodes `rows` latents and writes field `field` as `rows × field_size`.
///
/// # Safety
/// `latents` must hold `rows · latent_dim` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_decode(
    engine: *const ShredEngine,
    latents: *const f64,
    rows: usize,
    field: usize,
    out: *mut f64,
    out_len: usize,
) -> ShredStatus {
    guard(|| {
        let e = get(engine, "engine")?;
        let z = matrix_in(latents, rows, e.inner.latent_dim(), "latents")?;
        let recon = e.inner.decode(&z)?;
        let (_, array) = recon
            .iter()
            .nth(field)
            .ok_or_else(|| invalid(format!("field index {field} out of range")))?;
        copy_values(array.data(), out, out_len)
    })
}

/// Rolls the model's latent forecaster `horizon` steps past the last row of
/// `seed` (`rows × latent_dim`) and writes `horizon × latent_dim` values.
///
/// # Safety
/// `seed` must hold `rows · latent_dim` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_forecast(
    engine: *const ShredEngine,
    seed: *const f64,
    rows: usize,
    horizon: usize,
    out: *mut f64,
    out_len: usize,
) -> ShredStatus {
    guard(|| {
        let e = get(engine, "engine")?;
        let seed = matrix_in(seed, rows, e.inner.latent_dim(), "seed")?;
        let z = e.inner.forecast_latent(&seed, horizon)?;
        copy_matrix(&z, out, out_len)
    })
}

/// # Safety
/// `engine` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn shred_engine_free(engine: *mut ShredEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}
