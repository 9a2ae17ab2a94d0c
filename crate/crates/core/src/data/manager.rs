use std::ops::Range;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::array::FieldArray;
use super::codec::{Compression, FieldCodec};
use super::lagged::{build_lagged_sequences, Sequences};
use super::sensors::{
    extract_measurements, random_locations, SensorLocation, SensorSource, SensorSpec,
};
use crate::error::{invalid, shape_err, Result, ShredError};
use crate::linalg::{Matrix, MinMaxScaler};
use crate::rng;

/// Settings fixed at manager creation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManagerConfig {
    pub lags: usize,
    pub train_size: f64,
    pub val_size: f64,
    pub test_size: f64,
    /// Data carries a leading trajectory axis.
    pub parametric: bool,
    /// Drives the trajectory split and compressor fitting.
    pub seed: u64,
}

impl ManagerConfig {
    pub fn new(lags: usize, train_size: f64, val_size: f64, test_size: f64) -> Self {
        Self {
            lags,
            train_size,
            val_size,
            test_size,
            parametric: false,
            seed: 0,
        }
    }

    pub fn parametric(mut self) -> Self {
        self.parametric = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lags == 0 {
            return invalid("lags must be at least 1");
        }
        let fr = [self.train_size, self.val_size, self.test_size];
        if fr.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return invalid(format!("split fractions must be positive, got {fr:?}"));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return invalid(format!("split fractions sum to {sum}, expected 1"));
        }
        Ok(())
    }
}

impl Default for ManagerConfig {
    fn default() -> Self {
        Self::new(52, 0.8, 0.1, 0.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = ShredError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => invalid(format!("unknown split `{other}` (train, val, test)")),
        }
    }
}

/// Which samples belong to which partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitPlan {
    /// Contiguous time blocks, earliest first.
    Temporal {
        train: Range<usize>,
        val: Range<usize>,
        test: Range<usize>,
    },
    /// Whole trajectories, sorted indices per partition.
    Trajectories {
        train: Vec<usize>,
        val: Vec<usize>,
        test: Vec<usize>,
    },
}

impl SplitPlan {
    /// Validation and test sizes are rounded; training takes the remainder.
    fn counts(cfg: &ManagerConfig, n: usize) -> Result<(usize, usize, usize)> {
        let val = (cfg.val_size * n as f64).round() as usize;
        let test = (cfg.test_size * n as f64).round() as usize;
        let train = n.saturating_sub(val + test);
        if train == 0 || val == 0 || test == 0 {
            return invalid(format!(
                "{n} units cannot be split {}/{}/{} without an empty partition",
                cfg.train_size, cfg.val_size, cfg.test_size
            ));
        }
        Ok((train, val, test))
    }

    fn temporal(cfg: &ManagerConfig, time_len: usize) -> Result<Self> {
        let (tr, va, _) = Self::counts(cfg, time_len)?;
        Ok(SplitPlan::Temporal {
            train: 0..tr,
            val: tr..tr + va,
            test: tr + va..time_len,
        })
    }

    fn trajectories(cfg: &ManagerConfig, count: usize) -> Result<Self> {
        let (tr, va, _) = Self::counts(cfg, count)?;
        let mut order: Vec<usize> = (0..count).collect();
        order.shuffle(&mut rng::substream(cfg.seed, 0x5711));
        let part = |r: Range<usize>| {
            let mut v = order[r].to_vec();
            v.sort_unstable();
            v
        };
        Ok(SplitPlan::Trajectories {
            train: part(0..tr),
            val: part(tr..tr + va),
            test: part(tr + va..count),
        })
    }

    /// Sample rows (trajectory-major) belonging to `split`.
    pub fn rows(&self, split: Split, time_len: usize) -> Vec<usize> {
        match self {
            SplitPlan::Temporal { train, val, test } => match split {
                Split::Train => train.clone().collect(),
                Split::Val => val.clone().collect(),
                Split::Test => test.clone().collect(),
            },
            SplitPlan::Trajectories { .. } => self
                .trajectory_ids(split)
                .unwrap_or_default()
                .iter()
                .flat_map(|r| r * time_len..(r + 1) * time_len)
                .collect(),
        }
    }

    pub fn trajectory_ids(&self, split: Split) -> Option<&[usize]> {
        match self {
            SplitPlan::Temporal { .. } => None,
            SplitPlan::Trajectories { train, val, test } => Some(match split {
                Split::Train => train,
                Split::Val => val,
                Split::Test => test,
            }),
        }
    }
}

/// Lagged sensor windows with their targets.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceDataset {
    /// Scaled sensor windows, `len × lags × sensors`.
    pub sequences: Sequences,
    /// Scaled, compressed targets, `len × total latent width`.
    pub targets: Matrix,
    /// Sample row of each entry in the manager's (trajectory-major) layout.
    pub rows: Vec<usize>,
}

impl SequenceDataset {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreparedDatasets {
    pub train: SequenceDataset,
    pub val: SequenceDataset,
    pub test: SequenceDataset,
}

/// Per-field decoding metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub id: String,
    pub spatial_shape: Vec<usize>,
    pub codec: FieldCodec,
}

/// Everything downstream consumers need to turn raw readings into model
/// inputs and model outputs back into fields. Serializable; holds no raw data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub lags: usize,
    pub parametric: bool,
    pub time_len: usize,
    /// 1 for non-parametric data.
    pub trajectories: usize,
    pub fields: Vec<FieldMeta>,
    pub sensors: Vec<SensorSpec>,
    pub sensor_scaler: MinMaxScaler,
    pub split: SplitPlan,
}

impl Preprocessing {
    pub fn input_width(&self) -> usize {
        self.sensors.len()
    }

    pub fn field_widths(&self) -> Vec<usize> {
        self.fields.iter().map(|f| f.codec.latent_width()).collect()
    }

    pub fn output_width(&self) -> usize {
        self.field_widths().iter().sum()
    }

    pub fn sample_rows(&self, split: Split) -> Vec<usize> {
        self.split.rows(split, self.time_len)
    }
}

struct FieldEntry {
    id: String,
    spatial_shape: Vec<usize>,
    codec: FieldCodec,
    /// Encoded targets for every sample row.
    targets: Matrix,
}

/// Registers fields and sensors and produces train/validation/test datasets.
///
/// Data passed to [`DataManager::add_data`] has time on the first axis (or
/// trajectories then time when the manager is parametric) and space on the
/// remaining axes. Raw arrays are consumed: the manager keeps only the
/// encoded targets and the sensor readings.
pub struct DataManager {
    cfg: ManagerConfig,
    fields: Vec<FieldEntry>,
    sensors: Vec<SensorSpec>,
    measurements: Matrix,
    time_len: usize,
    trajectories: usize,
    split: Option<SplitPlan>,
    sensor_scaler: Option<MinMaxScaler>,
}

impl DataManager {
    pub fn new(cfg: ManagerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            fields: Vec::new(),
            sensors: Vec::new(),
            measurements: Matrix::zeros(0, 0),
            time_len: 0,
            trajectories: 0,
            split: None,
            sensor_scaler: None,
        })
    }

    pub fn config(&self) -> &ManagerConfig {
        &self.cfg
    }

    pub fn lags(&self) -> usize {
        self.cfg.lags
    }

    pub fn is_parametric(&self) -> bool {
        self.cfg.parametric
    }

    pub fn time_len(&self) -> usize {
        self.time_len
    }

    pub fn trajectories(&self) -> usize {
        self.trajectories
    }

    pub fn field_ids(&self) -> Vec<&str> {
        self.fields.iter().map(|f| f.id.as_str()).collect()
    }

    pub fn sensors(&self) -> &[SensorSpec] {
        &self.sensors
    }

    pub fn split_plan(&self) -> Option<&SplitPlan> {
        self.split.as_ref()
    }

    /// Raw (possibly noisy) sensor readings, one row per sample.
    pub fn measurements(&self) -> &Matrix {
        &self.measurements
    }

    /// Raw readings of one partition, in sample order.
    pub fn split_measurements(&self, split: Split) -> Result<Matrix> {
        let plan = self
            .split
            .as_ref()
            .ok_or_else(|| ShredError::InvalidArgument("no data added".into()))?;
        Ok(self
            .measurements
            .select_rows(&plan.rows(split, self.time_len)))
    }

    pub fn add_data(
        &mut self,
        data: FieldArray,
        id: &str,
        sensors: SensorSource,
        compress: Compression,
    ) -> Result<()> {
        if self.fields.iter().any(|f| f.id == id) {
            return invalid(format!("dataset id `{id}` already registered"));
        }
        if data.data().iter().any(|v| !v.is_finite()) {
            return Err(ShredError::NonFinite(format!("dataset `{id}`")));
        }
        let lead = if self.cfg.parametric { 2 } else { 1 };
        if data.ndim() <= lead {
            return shape_err(format!(
                "dataset `{id}` of shape {:?} needs {lead} leading axes plus space",
                data.shape()
            ));
        }
        let (trajectories, time_len) = if self.cfg.parametric {
            (data.shape()[0], data.shape()[1])
        } else {
            (1, data.shape()[0])
        };
        if self.fields.is_empty() {
            self.split = Some(if self.cfg.parametric {
                SplitPlan::trajectories(&self.cfg, trajectories)?
            } else {
                SplitPlan::temporal(&self.cfg, time_len)?
            });
            self.time_len = time_len;
            self.trajectories = trajectories;
            self.measurements = Matrix::zeros(trajectories * time_len, 0);
        } else if (trajectories, time_len) != (self.trajectories, self.time_len) {
            return shape_err(format!(
                "dataset `{id}` has {trajectories} trajectories x {time_len} steps, expected {} x {}",
                self.trajectories, self.time_len
            ));
        }
        let spatial_shape = data.shape()[lead..].to_vec();
        let rows = trajectories * time_len;

        let new_readings = self.readings_for(&data, id, &spatial_shape, sensors)?;

        let plan = self.split.as_ref().expect("set above");
        let train_rows = plan.rows(Split::Train, time_len);
        let train = data.select_rows(lead, &train_rows);
        let seed = self.cfg.seed.wrapping_add(self.fields.len() as u64);
        let codec = FieldCodec::fit(&train, &spatial_shape, compress, seed)?;
        drop(train);
        let snapshots = data.into_matrix(lead);
        debug_assert_eq!(snapshots.rows(), rows);
        let targets = codec.encode(&snapshots)?;

        if let Some((specs, readings)) = new_readings {
            self.measurements = Matrix::hstack(&[&self.measurements, &readings])?;
            self.sensors.extend(specs);
        }
        self.fields.push(FieldEntry {
            id: id.to_string(),
            spatial_shape,
            codec,
            targets,
        });
        self.sensor_scaler = None;
        Ok(())
    }

    fn readings_for(
        &self,
        data: &FieldArray,
        id: &str,
        spatial_shape: &[usize],
        sensors: SensorSource,
    ) -> Result<Option<(Vec<SensorSpec>, Matrix)>> {
        let rows = self.trajectories * self.time_len;
        let locations = match sensors {
            SensorSource::None => return Ok(None),
            SensorSource::Measurements(m) => {
                if m.rows() != rows {
                    return shape_err(format!(
                        "measurements for `{id}` have {} rows, expected {rows}",
                        m.rows()
                    ));
                }
                if !m.is_finite() {
                    return Err(ShredError::NonFinite(format!("measurements for `{id}`")));
                }
                let specs = (0..m.cols())
                    .map(|_| SensorSpec {
                        field: id.to_string(),
                        location: SensorLocation::External,
                    })
                    .collect();
                return Ok(Some((specs, m)));
            }
            SensorSource::Random { count, seed } => random_locations(spatial_shape, count, seed)?,
            SensorSource::Explicit(locs) => locs,
        };
        let readings = if self.cfg.parametric {
            let per = self.time_len * spatial_shape.iter().product::<usize>();
            let mut blocks = Vec::with_capacity(self.trajectories);
            for r in 0..self.trajectories {
                let mut shape = vec![self.time_len];
                shape.extend_from_slice(spatial_shape);
                let traj = FieldArray::new(shape, data.data()[r * per..(r + 1) * per].to_vec())?;
                blocks.push(extract_measurements(&traj, &locations)?);
            }
            Matrix::vstack(&blocks.iter().collect::<Vec<_>>())?
        } else {
            extract_measurements(data, &locations)?
        };
        let specs = locations
            .into_iter()
            .map(|location| SensorSpec {
                field: id.to_string(),
                location,
            })
            .collect();
        Ok(Some((specs, readings)))
    }

    /// Adds i.i.d. `N(0, std²)` noise to the stored sensor readings.
    pub fn inject_noise(&mut self, std: f64, seed: u64) -> Result<()> {
        if !(std >= 0.0) || !std.is_finite() {
            return invalid(format!("noise std must be nonnegative, got {std}"));
        }
        if self.fields.is_empty() {
            return invalid("no sensor readings to perturb");
        }
        if std == 0.0 {
            return Ok(());
        }
        let normal =
            Normal::new(0.0, std).map_err(|e| ShredError::InvalidArgument(e.to_string()))?;
        let mut r = rng::seeded(seed);
        for v in self.measurements.as_mut_slice() {
            *v += normal.sample(&mut r);
        }
        self.sensor_scaler = None;
        Ok(())
    }

    /// Builds the three datasets. Sensor scaling is fitted on training rows.
    pub fn prepare(&mut self) -> Result<PreparedDatasets> {
        if self.fields.is_empty() {
            return invalid("prepare called before add_data");
        }
        if self.sensors.is_empty() {
            return invalid("no sensors registered on any field");
        }
        let plan = self.split.clone().expect("set with first field");
        let train_rows = plan.rows(Split::Train, self.time_len);
        let scaler = MinMaxScaler::fit(&self.measurements.select_rows(&train_rows))?;
        let scaled = scaler.apply(&self.measurements)?;
        let sequences = self.lagged(&scaled)?;
        let targets = Matrix::hstack(&self.fields.iter().map(|f| &f.targets).collect::<Vec<_>>())?;
        self.sensor_scaler = Some(scaler);

        let make = |split| {
            let rows = plan.rows(split, self.time_len);
            SequenceDataset {
                sequences: sequences.select(&rows),
                targets: targets.select_rows(&rows),
                rows,
            }
        };
        Ok(PreparedDatasets {
            train: make(Split::Train),
            val: make(Split::Val),
            test: make(Split::Test),
        })
    }

    fn lagged(&self, scaled: &Matrix) -> Result<Sequences> {
        let mut parts = Vec::with_capacity(self.trajectories);
        for r in 0..self.trajectories {
            let rows: Vec<usize> = (r * self.time_len..(r + 1) * self.time_len).collect();
            parts.push(build_lagged_sequences(&scaled.select_rows(&rows), self.cfg.lags)?.0);
        }
        Sequences::concat(&parts)
    }

    /// Decoding state for engines and checkpoints. Requires [`DataManager::prepare`].
    pub fn preprocessing(&self) -> Result<Preprocessing> {
        let sensor_scaler = self.sensor_scaler.clone().ok_or_else(|| {
            ShredError::InvalidArgument("call prepare before exporting preprocessing".into())
        })?;
        Ok(Preprocessing {
            lags: self.cfg.lags,
            parametric: self.cfg.parametric,
            time_len: self.time_len,
            trajectories: self.trajectories,
            fields: self
                .fields
                .iter()
                .map(|f| FieldMeta {
                    id: f.id.clone(),
                    spatial_shape: f.spatial_shape.clone(),
                    codec: f.codec.clone(),
                })
                .collect(),
            sensors: self.sensors.clone(),
            sensor_scaler,
            split: self.split.clone().expect("prepared"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(t: usize, m: usize, n: usize) -> FieldArray {
        let data = (0..t * m * n)
            .map(|k| {
                let (tt, s) = (k / (m * n), k % (m * n));
                (0.1 * tt as f64 + s as f64 * 0.37).sin()
            })
            .collect();
        FieldArray::new(vec![t, m, n], data).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(DataManager::new(ManagerConfig::new(52, 0.8, 0.1, 0.1)).is_ok());
        assert!(DataManager::new(ManagerConfig::new(25, 0.8, 0.1, 0.1).parametric()).is_ok());
        assert!(DataManager::new(ManagerConfig::new(1, 0.5, 0.25, 0.25)).is_ok());
        assert!(DataManager::new(ManagerConfig::new(0, 0.5, 0.25, 0.25)).is_err());
        assert!(DataManager::new(ManagerConfig::new(3, 0.5, 0.3, 0.3)).is_err());
    }

    #[test]
    fn temporal_split_is_contiguous() {
        let mut mgr = DataManager::new(ManagerConfig::new(4, 0.8, 0.1, 0.1)).unwrap();
        mgr.add_data(
            series(100, 3, 4),
            "X",
            SensorSource::Random { count: 2, seed: 1 },
            Compression::None,
        )
        .unwrap();
        let d = mgr.prepare().unwrap();
        assert_eq!(d.train.rows, (0..80).collect::<Vec<_>>());
        assert_eq!(d.val.rows, (80..90).collect::<Vec<_>>());
        assert_eq!(d.test.rows, (90..100).collect::<Vec<_>>());
        assert_eq!(d.train.sequences.lags(), 4);
        assert_eq!(d.train.sequences.width(), 2);
        assert_eq!(d.train.targets.cols(), 12);
    }

    #[test]
    fn split_sizes_for_weekly_record() {
        let plan = SplitPlan::temporal(&ManagerConfig::new(52, 0.8, 0.1, 0.1), 1727).unwrap();
        assert_eq!(plan.rows(Split::Test, 1727).len(), 173);
        assert_eq!(plan.rows(Split::Val, 1727).len(), 173);
        assert_eq!(plan.rows(Split::Train, 1727).len(), 1381);
    }

    #[test]
    fn parametric_split_assigns_whole_trajectories() {
        let cfg = ManagerConfig::new(3, 0.8, 0.1, 0.1)
            .parametric()
            .with_seed(4);
        let plan = SplitPlan::trajectories(&cfg, 100).unwrap();
        let (tr, va, te) = (
            plan.trajectory_ids(Split::Train).unwrap(),
            plan.trajectory_ids(Split::Val).unwrap(),
            plan.trajectory_ids(Split::Test).unwrap(),
        );
        assert_eq!((tr.len(), va.len(), te.len()), (80, 10, 10));
        let mut all: Vec<usize> = tr.iter().chain(va).chain(te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn multi_field_targets_concatenate() {
        let cfg = ManagerConfig::new(2, 0.6, 0.2, 0.2)
            .parametric()
            .with_seed(1);
        let mut mgr = DataManager::new(cfg).unwrap();
        let make = |phase: f64| {
            let (r, t, m, n) = (5, 10, 3, 4);
            let data = (0..r * t * m * n)
                .map(|k| {
                    ((k % (m * n)) as f64 * 0.3 + phase + (k / (t * m * n)) as f64).cos()
                        * ((k / (m * n)) % t) as f64
                })
                .collect();
            FieldArray::new(vec![r, t, m, n], data).unwrap()
        };
        mgr.add_data(
            make(0.0),
            "U",
            SensorSource::Random { count: 3, seed: 2 },
            Compression::Svd(4),
        )
        .unwrap();
        mgr.add_data(make(1.0), "V", SensorSource::None, Compression::Svd(4))
            .unwrap();
        let d = mgr.prepare().unwrap();
        assert_eq!(d.train.targets.cols(), 8);
        assert_eq!(d.train.sequences.width(), 3);
        assert_eq!(d.train.len() + d.val.len() + d.test.len(), 50);
        let p = mgr.preprocessing().unwrap();
        assert_eq!(p.field_widths(), vec![4, 4]);
        assert_eq!(p.input_width(), 3);
    }

    #[test]
    fn lagged_windows_restart_per_trajectory() {
        let cfg = ManagerConfig::new(3, 0.6, 0.2, 0.2).parametric();
        let mut mgr = DataManager::new(cfg).unwrap();
        let (r, t) = (5, 4);
        let data: Vec<f64> = (0..r * t * 2).map(|k| k as f64).collect();
        mgr.add_data(
            FieldArray::new(vec![r, t, 2], data).unwrap(),
            "X",
            SensorSource::Explicit(vec![SensorLocation::Stationary(vec![0])]),
            Compression::None,
        )
        .unwrap();
        let d = mgr.prepare().unwrap();
        // first window of every trajectory is a single repeated reading
        for (i, &row) in d.train.rows.iter().enumerate() {
            if row % t == 0 {
                let w = d.train.sequences.window(i);
                assert!(w.iter().all(|v| *v == w[0]));
            }
        }
    }

    #[test]
    fn add_data_errors() {
        let mut mgr = DataManager::new(ManagerConfig::new(2, 0.6, 0.2, 0.2)).unwrap();
        mgr.add_data(series(10, 2, 2), "A", SensorSource::None, Compression::None)
            .unwrap();
        let dup = mgr.add_data(series(10, 2, 2), "A", SensorSource::None, Compression::None);
        assert!(dup.is_err());
        let wrong_t = mgr.add_data(series(11, 2, 2), "B", SensorSource::None, Compression::None);
        assert!(wrong_t.is_err());
        let oob = mgr.add_data(
            series(10, 2, 2),
            "C",
            SensorSource::Explicit(vec![SensorLocation::Stationary(vec![2, 0])]),
            Compression::None,
        );
        assert!(oob.is_err());
        let big_k = mgr.add_data(
            series(10, 2, 2),
            "D",
            SensorSource::None,
            Compression::Svd(5),
        );
        assert!(big_k.is_err());
        let mut nan = series(10, 2, 2);
        nan.data_mut()[3] = f64::NAN;
        assert!(matches!(
            mgr.add_data(nan, "E", SensorSource::None, Compression::None),
            Err(ShredError::NonFinite(_))
        ));
        // no sensors anywhere
        assert!(mgr.prepare().is_err());
    }

    #[test]
    fn noise_is_seeded_and_zero_std_is_noop() {
        let build = || {
            let mut m = DataManager::new(ManagerConfig::new(2, 0.6, 0.2, 0.2)).unwrap();
            m.add_data(
                series(20, 3, 3),
                "X",
                SensorSource::Random { count: 2, seed: 3 },
                Compression::None,
            )
            .unwrap();
            m
        };
        let mut a = build();
        let before = a.measurements().clone();
        a.inject_noise(0.0, 1).unwrap();
        assert_eq!(a.measurements(), &before);
        a.inject_noise(0.01, 1).unwrap();
        let mut b = build();
        b.inject_noise(0.01, 1).unwrap();
        assert_eq!(a.measurements(), b.measurements());
        assert_ne!(a.measurements(), &before);
        assert!(a.inject_noise(-1.0, 0).is_err());
    }

    #[test]
    fn prepare_is_repeatable() {
        let mut mgr = DataManager::new(ManagerConfig::new(3, 0.6, 0.2, 0.2)).unwrap();
        mgr.add_data(
            series(30, 4, 4),
            "X",
            SensorSource::Random { count: 3, seed: 8 },
            Compression::Svd(3),
        )
        .unwrap();
        let a = mgr.prepare().unwrap();
        let b = mgr.prepare().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaled_training_inputs_lie_in_unit_interval() {
        let mut mgr = DataManager::new(ManagerConfig::new(3, 0.6, 0.2, 0.2)).unwrap();
        mgr.add_data(
            series(30, 4, 4),
            "X",
            SensorSource::Random { count: 3, seed: 8 },
            Compression::None,
        )
        .unwrap();
        let d = mgr.prepare().unwrap();
        for i in 0..d.train.len() {
            assert!(d
                .train
                .sequences
                .window(i)
                .iter()
                .all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        }
    }
}
