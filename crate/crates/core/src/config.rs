//! TOML run configuration for the command-line tool.
//!
//! ```toml
//! seed = 7
//!
//! [generate]                 # only read by `shred generate`
//! kind = "traveling_wave"    # or "double_gyre"
//! id = "wave"
//! rows = 64
//! cols = 64
//! steps = 500
//! speed = 0.5
//! wavelength = 32.0
//!
//! [manager]
//! lags = 52
//! train_size = 0.8
//! val_size = 0.1
//! test_size = 0.1
//! parametric = false
//! noise_std = 0.0
//!
//! [[fields]]
//! id = "wave"
//! path = "data/wave.shdf"    # relative to this file
//! compress = { kind = "svd", modes = 4 }
//! sensors = { stationary = [[10, 20], [40, 5]], mobile = [{ center = [32.0, 32.0], radius = 10.0, step = 0.05 }] }
//!
//! [model]
//! cell = "lstm"
//! hidden_size = 64
//! num_layers = 2
//! decoder_layers = [350, 400]
//! activation = "relu"
//!
//! [train]
//! epochs = 100
//!
//! [forecaster]
//! kind = "sindy"             # "none", "sindy" or "recurrent"
//! poly_order = 1
//! include_sine = true
//! dt = 0.2
//! ```
//!
//! Unknown keys are rejected. Semantic errors name the offending key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{circular_trajectory, Compression, ManagerConfig, SensorLocation, SensorSource};
use crate::error::{Result, ShredError};
use crate::forecast::{ForecasterConfig, SindyLibrary};
use crate::model::{Activation, CellKind, ModelConfig, TrainConfig};
use crate::synthetic::{DoubleGyreParams, DEFAULT_EPSILON_RANGE, DEFAULT_OMEGA_RANGE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub generate: Option<GenerateSection>,
    #[serde(default)]
    pub manager: ManagerSection,
    #[serde(default)]
    pub fields: Vec<FieldSection>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub forecaster: ForecasterSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    /// Directory that relative field paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GenerateSection {
    TravelingWave {
        #[serde(default = "default_wave_id")]
        id: String,
        #[serde(default = "default_grid")]
        rows: usize,
        #[serde(default = "default_grid")]
        cols: usize,
        #[serde(default = "default_steps")]
        steps: usize,
        #[serde(default = "default_speed")]
        speed: f64,
        #[serde(default = "default_wavelength")]
        wavelength: f64,
    },
    DoubleGyre {
        #[serde(default = "default_trajectories")]
        trajectories: usize,
        #[serde(default)]
        grid: DoubleGyreParams,
        #[serde(default = "default_epsilon_range")]
        epsilon_range: (f64, f64),
        #[serde(default = "default_omega_range")]
        omega_range: (f64, f64),
    },
}

fn default_wave_id() -> String {
    "wave".into()
}
fn default_grid() -> usize {
    64
}
fn default_steps() -> usize {
    500
}
fn default_speed() -> f64 {
    0.5
}
fn default_wavelength() -> f64 {
    32.0
}
fn default_trajectories() -> usize {
    100
}
fn default_epsilon_range() -> (f64, f64) {
    DEFAULT_EPSILON_RANGE
}
fn default_omega_range() -> (f64, f64) {
    DEFAULT_OMEGA_RANGE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManagerSection {
    pub lags: usize,
    pub train_size: f64,
    pub val_size: f64,
    pub test_size: f64,
    pub parametric: bool,
    /// Standard deviation of Gaussian noise added to the sensor readings.
    pub noise_std: f64,
}

impl Default for ManagerSection {
    fn default() -> Self {
        let m = ManagerConfig::default();
        Self {
            lags: m.lags,
            train_size: m.train_size,
            val_size: m.val_size,
            test_size: m.test_size,
            parametric: false,
            noise_std: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum CompressSection {
    #[default]
    None,
    Svd {
        modes: usize,
    },
    Fourier {
        kx: usize,
        ky: usize,
    },
}

impl CompressSection {
    pub fn to_compression(&self) -> Compression {
        match *self {
            CompressSection::None => Compression::None,
            CompressSection::Svd { modes } => Compression::Svd(modes),
            CompressSection::Fourier { kx, ky } => Compression::Fourier { kx, ky },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircularPath {
    pub center: (f64, f64),
    pub radius: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    /// Number of randomly placed stationary sensors.
    pub random: Option<usize>,
    /// Seed for the random placement; defaults to the run seed plus the field index.
    pub seed: Option<u64>,
    pub stationary: Vec<Vec<usize>>,
    pub mobile: Vec<CircularPath>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub compress: CompressSection,
    #[serde(default)]
    pub sensors: Option<SensorSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub cell: CellKind,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub decoder_layers: Vec<usize>,
    pub activation: Activation,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::new(1, 1);
        Self {
            cell: m.cell,
            hidden_size: m.hidden_size,
            num_layers: m.num_layers,
            decoder_layers: m.decoder_layers,
            activation: m.activation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub sindy_regularization: f64,
    pub sindy_thres_epoch: usize,
    pub sindy_threshold: f64,
    pub sindy_ridge: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            patience: t.patience,
            sindy_regularization: t.sindy_regularization,
            sindy_thres_epoch: t.sindy_thres_epoch,
            sindy_threshold: t.sindy_threshold,
            sindy_ridge: t.sindy_ridge,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum ForecasterSection {
    #[default]
    None,
    Sindy {
        #[serde(default = "default_poly_order")]
        poly_order: usize,
        #[serde(default = "default_true")]
        include_sine: bool,
        #[serde(default = "default_sindy_dt")]
        dt: f64,
    },
    Recurrent {
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_forecaster_hidden")]
        hidden_size: usize,
        #[serde(default = "default_one")]
        num_layers: usize,
        #[serde(default = "default_forecaster_epochs")]
        epochs: usize,
        #[serde(default = "default_forecaster_lr")]
        learning_rate: f64,
    },
}

fn default_poly_order() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_sindy_dt() -> f64 {
    0.2
}
fn default_window() -> usize {
    10
}
fn default_forecaster_hidden() -> usize {
    32
}
fn default_one() -> usize {
    1
}
fn default_forecaster_epochs() -> usize {
    100
}
fn default_forecaster_lr() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// `evaluate` fails when any field's mean relative error exceeds this.
    pub max_relative_error: Option<f64>,
}

fn located(path: &str, message: impl Into<String>) -> ShredError {
    ShredError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Parses and validates a configuration. `base_dir` anchors relative paths.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let path = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<config>".into());
            located(&path, message)
        })?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.manager_config()
            .validate()
            .map_err(|e| located("manager", e.to_string()))?;
        if !(self.manager.noise_std >= 0.0) || !self.manager.noise_std.is_finite() {
            return Err(located(
                "manager.noise_std",
                "must be finite and nonnegative",
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, f) in self.fields.iter().enumerate() {
            let at = |key: &str| format!("fields[{i}].{key}");
            if f.id.is_empty() {
                return Err(located(&at("id"), "must not be empty"));
            }
            if !seen.insert(f.id.as_str()) {
                return Err(located(&at("id"), format!("duplicate field id `{}`", f.id)));
            }
            match f.compress {
                CompressSection::Svd { modes: 0 } => {
                    return Err(located(&at("compress.modes"), "must be at least 1"))
                }
                CompressSection::Fourier { kx, ky } if kx == 0 && ky == 0 => {
                    return Err(located(&at("compress"), "kx and ky cannot both be zero"))
                }
                _ => {}
            }
            if let Some(s) = &f.sensors {
                let explicit = !s.stationary.is_empty() || !s.mobile.is_empty();
                if s.random.is_some() && explicit {
                    return Err(located(
                        &at("sensors"),
                        "use either `random` or explicit locations, not both",
                    ));
                }
                if s.seed.is_some() && s.random.is_none() {
                    return Err(located(
                        &at("sensors.seed"),
                        "only applies to random sensors",
                    ));
                }
                for (k, p) in s.mobile.iter().enumerate() {
                    if !(p.radius >= 0.0)
                        || !p.step.is_finite()
                        || !p.center.0.is_finite()
                        || !p.center.1.is_finite()
                    {
                        return Err(located(
                            &at(&format!("sensors.mobile[{k}]")),
                            "needs finite center, step and radius",
                        ));
                    }
                }
            }
        }
        self.model_config(1, 1)
            .validate()
            .map_err(|e| located("model", e.to_string()))?;
        self.train_config()
            .validate()
            .map_err(|e| located("train", e.to_string()))?;
        match &self.forecaster {
            ForecasterSection::Sindy { dt, .. } if !(*dt > 0.0) || !dt.is_finite() => {
                return Err(located("forecaster.dt", "must be positive"));
            }
            ForecasterSection::Recurrent {
                window,
                hidden_size,
                num_layers,
                epochs,
                learning_rate,
            } => {
                if *window == 0 || *hidden_size == 0 || *num_layers == 0 || *epochs == 0 {
                    return Err(located(
                        "forecaster",
                        "window, hidden_size, num_layers and epochs must be positive",
                    ));
                }
                if !(*learning_rate >= 0.0) {
                    return Err(located("forecaster.learning_rate", "must be nonnegative"));
                }
            }
            _ => {}
        }
        if let Some(GenerateSection::DoubleGyre {
            trajectories,
            grid,
            epsilon_range,
            omega_range,
        }) = &self.generate
        {
            if *trajectories == 0 {
                return Err(located("generate.trajectories", "must be at least 1"));
            }
            grid.validate()
                .map_err(|e| located("generate.grid", e.to_string()))?;
            if !(epsilon_range.0 <= epsilon_range.1) {
                return Err(located(
                    "generate.epsilon_range",
                    "lower bound exceeds upper bound",
                ));
            }
            if !(omega_range.0 <= omega_range.1) {
                return Err(located(
                    "generate.omega_range",
                    "lower bound exceeds upper bound",
                ));
            }
        }
        if let Some(GenerateSection::TravelingWave {
            rows,
            cols,
            steps,
            wavelength,
            speed,
            ..
        }) = &self.generate
        {
            if *rows == 0 || *cols == 0 || *steps == 0 {
                return Err(located("generate", "rows, cols and steps must be positive"));
            }
            if !(*wavelength > 0.0) || !speed.is_finite() {
                return Err(located(
                    "generate",
                    "wavelength must be positive and speed finite",
                ));
            }
        }
        if let Some(t) = self.evaluate.max_relative_error {
            if !(t >= 0.0) {
                return Err(located(
                    "evaluate.max_relative_error",
                    "must be nonnegative",
                ));
            }
        }
        Ok(())
    }

    pub fn manager_config(&self) -> ManagerConfig {
        let m = &self.manager;
        let mut cfg =
            ManagerConfig::new(m.lags, m.train_size, m.val_size, m.test_size).with_seed(self.seed);
        cfg.parametric = m.parametric;
        cfg
    }

    pub fn model_config(&self, input_size: usize, output_size: usize) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            cell: m.cell,
            input_size,
            hidden_size: m.hidden_size,
            num_layers: m.num_layers,
            decoder_layers: m.decoder_layers.clone(),
            activation: m.activation,
            output_size,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            patience: t.patience,
            seed: self.seed,
            sindy_regularization: t.sindy_regularization,
            sindy_thres_epoch: t.sindy_thres_epoch,
            sindy_threshold: t.sindy_threshold,
            sindy_ridge: t.sindy_ridge,
        }
    }

    pub fn sindy_library(&self, latent_dim: usize) -> Option<(SindyLibrary, f64)> {
        match self.forecaster {
            ForecasterSection::Sindy {
                poly_order,
                include_sine,
                dt,
            } => Some((SindyLibrary::new(poly_order, include_sine, latent_dim), dt)),
            _ => None,
        }
    }

    pub fn recurrent_forecaster(&self) -> Option<(usize, ForecasterConfig)> {
        match self.forecaster {
            ForecasterSection::Recurrent {
                window,
                hidden_size,
                num_layers,
                epochs,
                learning_rate,
            } => {
                let base = self.train_config();
                Some((
                    window,
                    ForecasterConfig {
                        cell: self.model.cell,
                        hidden_size,
                        num_layers,
                        val_fraction: 0.1,
                        train: TrainConfig {
                            epochs,
                            learning_rate,
                            patience: epochs,
                            sindy_regularization: 0.0,
                            ..base
                        },
                    },
                ))
            }
            _ => None,
        }
    }

    pub fn field_path(&self, field: &FieldSection) -> PathBuf {
        if field.path.is_absolute() {
            field.path.clone()
        } else {
            self.base_dir.join(&field.path)
        }
    }

    /// Sensor source for field `index` once its time length is known.
    pub fn sensor_source(&self, index: usize, time_len: usize) -> SensorSource {
        let Some(s) = &self.fields[index].sensors else {
            return SensorSource::None;
        };
        if let Some(count) = s.random {
            return SensorSource::Random {
                count,
                seed: s.seed.unwrap_or(self.seed.wrapping_add(index as u64)),
            };
        }
        let mut locs: Vec<SensorLocation> = s
            .stationary
            .iter()
            .map(|p| SensorLocation::Stationary(p.clone()))
            .collect();
        locs.extend(
            s.mobile
                .iter()
                .map(|p| circular_trajectory(p.center, p.radius, p.step, time_len)),
        );
        if locs.is_empty() {
            SensorSource::None
        } else {
            SensorSource::Explicit(locs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 3
[generate]
kind = "traveling_wave"
rows = 8
[manager]
lags = 4
[[fields]]
id = "wave"
path = "wave.shdf"
compress = { kind = "svd", modes = 3 }
sensors = { stationary = [[1, 2]], mobile = [{ center = [4.0, 4.0], radius = 2.0, step = 0.1 }] }
[model]
cell = "gru"
hidden_size = 8
num_layers = 1
decoder_layers = [16]
[train]
epochs = 5
[forecaster]
kind = "sindy"
"#;

    #[test]
    fn parses_sample() {
        let cfg = RunConfig::parse(SAMPLE, "/tmp/x").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.manager.lags, 4);
        assert_eq!(cfg.manager.train_size, 0.8);
        assert_eq!(cfg.model.cell, CellKind::Gru);
        assert_eq!(cfg.train_config().seed, 3);
        assert_eq!(
            cfg.field_path(&cfg.fields[0]),
            PathBuf::from("/tmp/x/wave.shdf")
        );
        assert!(matches!(
            cfg.generate,
            Some(GenerateSection::TravelingWave {
                rows: 8,
                cols: 64,
                ..
            })
        ));
        assert!(matches!(
            cfg.forecaster,
            ForecasterSection::Sindy {
                poly_order: 1,
                include_sine: true,
                ..
            }
        ));
        match cfg.sensor_source(0, 10) {
            SensorSource::Explicit(l) => assert_eq!(l.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_with_location() {
        let err = RunConfig::parse("[manager]\nlagz = 3\n", ".").unwrap_err();
        match err {
            ShredError::Config { path, message } => {
                assert_eq!(path, "line 2");
                assert!(message.contains("lagz"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::parse("[forecaster]\nkind = \"sindy\"\nwindow = 3\n", ".").is_err());
        assert!(
            RunConfig::parse("[[fields]]\nid = \"a\"\npath = \"a\"\nextra = 1\n", ".").is_err()
        );
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let cases = [
            ("[manager]\nlags = 0\n", "manager"),
            ("[manager]\ntrain_size = 0.9\n", "manager"),
            ("[train]\nepochs = 0\n", "train"),
            ("[forecaster]\nkind = \"sindy\"\ndt = -1.0\n", "forecaster.dt"),
            ("[[fields]]\nid = \"a\"\npath = \"a\"\ncompress = { kind = \"svd\", modes = 0 }\n", "fields[0].compress.modes"),
            (
                "[[fields]]\nid = \"a\"\npath = \"a\"\nsensors = { random = 3, stationary = [[1]] }\n",
                "fields[0].sensors",
            ),
        ];
        for (text, key) in cases {
            match RunConfig::parse(text, ".") {
                Err(ShredError::Config { path, .. }) => assert_eq!(path, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn defaults_are_complete() {
        let cfg = RunConfig::parse("", ".").unwrap();
        assert_eq!(cfg.manager.lags, 52);
        assert_eq!(cfg.model.hidden_size, 64);
        assert_eq!(cfg.model.decoder_layers, vec![350, 400]);
        assert_eq!(cfg.forecaster, ForecasterSection::None);
    }
}
