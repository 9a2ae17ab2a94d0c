//! The `shred` command-line tool.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{GenerateSection, RunConfig};
use crate::data::{DataManager, FieldArray, Preprocessing, Split};
use crate::engine::{Engine, FieldMetrics};
use crate::error::{Result, ShredError};
use crate::forecast::{fit_recurrent_forecaster, LatentForecaster, SindyModel};
use crate::io::{load_checkpoint, load_dataset, save_checkpoint, save_dataset};
use crate::model::ShredModel;
use crate::synthetic::{double_gyre_ensemble, sample_parameters, traveling_wave};

#[derive(Debug, Parser)]
#[command(
    name = "shred",
    version,
    about = "Sparse-sensor field reconstruction and latent forecasting"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "shred.toml")]
    pub config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic datasets described by `[generate]`.
    Generate,
    /// Train a model and its latent forecaster.
    Train,
    /// Reconstruct the fields of one partition from its sensor readings.
    Reconstruct(RunArgs),
    /// Roll the latent state forward and decode the forecast.
    Forecast {
        #[command(flatten)]
        run: RunArgs,
        /// Number of steps to forecast.
        #[arg(long, default_value_t = 50)]
        horizon: usize,
    },
    /// Per-field error metrics on one partition.
    Evaluate(RunArgs),
    /// Print the learned SINDy equations.
    ExportEquations {
        /// Checkpoint to read; defaults to `<out>/model.shrd`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Checkpoint to read; defaults to `<out>/model.shrd`. The
    /// preprocessing file is expected next to it.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

/// What a successful run reports back to the shell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// Evaluation ran but a field missed `evaluate.max_relative_error`.
    ThresholdExceeded,
}

pub const EXIT_THRESHOLD: i32 = 1;

const NOISE_SEED_OFFSET: u64 = 0x6e6f_6973;

/// Process exit status for an error.
pub fn exit_code(e: &ShredError) -> i32 {
    match e {
        ShredError::Config { .. } => 2,
        ShredError::Shape(_)
        | ShredError::InvalidArgument(_)
        | ShredError::NonFinite(_)
        | ShredError::Format(_)
        | ShredError::Version { .. }
        | ShredError::Unsupported(_) => 3,
        ShredError::Numeric(_) | ShredError::Singular(_) | ShredError::Divergence { .. } => 4,
        ShredError::Io(_) => 5,
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Generate => generate(&cfg, &cli.out),
        Command::Train => train(&cfg, &cli.out),
        Command::Reconstruct(args) => reconstruct(&cfg, &cli.out, args),
        Command::Forecast { run, horizon } => forecast(&cfg, &cli.out, run, *horizon),
        Command::Evaluate(args) => evaluate(&cfg, &cli.out, args),
        Command::ExportEquations { checkpoint } => {
            let path = checkpoint
                .clone()
                .unwrap_or_else(|| cli.out.join("model.shrd"));
            export_equations(&load_checkpoint(path)?, &cli.out)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let text = fs::read_to_string(&cli.config).map_err(|e| ShredError::Config {
        path: cli.config.display().to_string(),
        message: format!("cannot read: {e}"),
    })?;
    let base = cli
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut cfg = RunConfig::parse(&text, base)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn sha256_hex(path: &Path) -> Result<String> {
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_dataset_reporting(dir: &Path, name: &str, id: &str, array: &FieldArray) -> Result<()> {
    let path = dir.join(format!("{name}.shdf"));
    save_dataset(&path, id, array)?;
    println!(
        "{}  {:?}  sha256={}",
        path.display(),
        array.shape(),
        sha256_hex(&path)?
    );
    Ok(())
}

fn generate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let section = cfg.generate.as_ref().ok_or_else(|| ShredError::Config {
        path: "generate".into(),
        message: "section is required by `shred generate`".into(),
    })?;
    fs::create_dir_all(out)?;
    match section {
        GenerateSection::TravelingWave {
            id,
            rows,
            cols,
            steps,
            speed,
            wavelength,
        } => {
            let w = traveling_wave(*rows, *cols, *steps, *speed, *wavelength)?;
            write_dataset_reporting(out, id, id, &w)?;
        }
        GenerateSection::DoubleGyre {
            trajectories,
            grid,
            epsilon_range,
            omega_range,
        } => {
            let sample = sample_parameters(*trajectories, *epsilon_range, *omega_range, cfg.seed)?;
            let (u, v, mu) = double_gyre_ensemble(grid, &sample)?;
            write_dataset_reporting(out, "u", "u", &u)?;
            write_dataset_reporting(out, "v", "v", &v)?;
            write_dataset_reporting(out, "mu", "mu", &mu)?;
            write_json(&out.join("parameters.json"), &sample)?;
        }
    }
    Ok(Outcome::Done)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| ShredError::Format(e.to_string()))?;
    Ok(fs::write(path, text + "\n")?)
}

fn load_field(cfg: &RunConfig, index: usize) -> Result<FieldArray> {
    let path = cfg.field_path(&cfg.fields[index]);
    let ds = load_dataset(&path).map_err(|e| match e {
        ShredError::Io(io) => ShredError::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })?;
    Ok(ds.array)
}

/// Registers every configured field. Readings are reproduced exactly on
/// each call since sensor placement and noise are seeded.
pub fn build_manager(cfg: &RunConfig) -> Result<DataManager> {
    if cfg.fields.is_empty() {
        return Err(ShredError::Config {
            path: "fields".into(),
            message: "at least one field is required".into(),
        });
    }
    let mut manager = DataManager::new(cfg.manager_config())?;
    for (i, field) in cfg.fields.iter().enumerate() {
        let array = load_field(cfg, i)?;
        let time_axis = usize::from(cfg.manager.parametric);
        let time_len = array.shape().get(time_axis).copied().unwrap_or(0);
        manager
            .add_data(
                array,
                &field.id,
                cfg.sensor_source(i, time_len),
                field.compress.to_compression(),
            )
            .map_err(|e| locate(e, &format!("fields[{i}] (`{}`)", field.id)))?;
    }
    manager.inject_noise(
        cfg.manager.noise_std,
        cfg.seed.wrapping_add(NOISE_SEED_OFFSET),
    )?;
    Ok(manager)
}

/// Prefixes a data error with the config entry that caused it.
fn locate(e: ShredError, at: &str) -> ShredError {
    match e {
        ShredError::Shape(m) => ShredError::Shape(format!("{at}: {m}")),
        ShredError::InvalidArgument(m) => ShredError::InvalidArgument(format!("{at}: {m}")),
        ShredError::NonFinite(m) => ShredError::NonFinite(format!("{at}: {m}")),
        other => other,
    }
}

#[derive(Serialize)]
struct EpochLog {
    epoch: usize,
    train_loss: f64,
    val_mse: f64,
}

fn train(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut manager = build_manager(cfg)?;
    let data = manager.prepare()?;
    let prep = manager.preprocessing()?;
    let mut model = ShredModel::new(cfg.model_config(prep.input_width(), prep.output_width()))?;
    let tcfg = cfg.train_config();
    if let Some((library, dt)) = cfg.sindy_library(model.latent_dim()) {
        model.set_forecaster(LatentForecaster::Sindy(SindyModel::new(
            library,
            dt,
            tcfg.sindy_threshold,
        )?))?;
    }
    eprintln!(
        "training on {} windows ({} val, {} test), {} sensors -> {} outputs",
        data.train.len(),
        data.val.len(),
        data.test.len(),
        prep.input_width(),
        prep.output_width()
    );
    let report = model.fit(&data.train, &data.val, &tcfg)?;
    drop(data);

    if let Some((window, fcfg)) = cfg.recurrent_forecaster() {
        let engine = Engine::from_manager(&manager, model.clone())?;
        let z = engine.sensor_to_latent(manager.measurements())?;
        let train_rows = prep.sample_rows(Split::Train);
        let (rf, _) = fit_recurrent_forecaster(&z.select_rows(&train_rows), window, &fcfg)?;
        model.set_forecaster(LatentForecaster::Recurrent(rf))?;
    }

    fs::create_dir_all(out)?;
    save_checkpoint(out.join("model.shrd"), &model)?;
    write_json(&out.join("preprocessing.json"), &prep)?;
    write_json(&out.join("report.json"), &report)?;
    let mut log = fs::File::create(out.join("train_log.jsonl"))?;
    for (epoch, (&train_loss, &val_mse)) in report
        .train_losses
        .iter()
        .zip(&report.val_errors)
        .enumerate()
    {
        let line = serde_json::to_string(&EpochLog {
            epoch,
            train_loss,
            val_mse,
        })
        .map_err(|e| ShredError::Format(e.to_string()))?;
        writeln!(log, "{line}")?;
    }
    if let LatentForecaster::Sindy(m) = model.forecaster() {
        write_equations(m, out)?;
    }
    println!(
        "epochs {}  best {}  train mse {:.6e}  val mse {:.6e}",
        report.val_errors.len(),
        report.best_epoch,
        report.train_mse,
        report.val_mse
    );
    Ok(Outcome::Done)
}

fn load_engine(cfg: &RunConfig, out: &Path, args: &RunArgs) -> Result<(Engine, DataManager)> {
    let ckpt = args
        .checkpoint
        .clone()
        .unwrap_or_else(|| out.join("model.shrd"));
    let model = load_checkpoint(&ckpt)?;
    let prep_path = ckpt.with_file_name("preprocessing.json");
    let text = fs::read_to_string(&prep_path)?;
    let prep: Preprocessing = serde_json::from_str(&text)
        .map_err(|e| ShredError::Format(format!("{}: {e}", prep_path.display())))?;
    let manager = build_manager(cfg)?;
    if manager.sensors().len() != prep.input_width() {
        return Err(ShredError::Shape(format!(
            "the configuration registers {} sensors but the checkpoint was trained on {}",
            manager.sensors().len(),
            prep.input_width()
        )));
    }
    let mut engine = Engine::new(prep, model)?;
    engine.set_measurements(manager.measurements().clone())?;
    Ok((engine, manager))
}

fn reconstruct(cfg: &RunConfig, out: &Path, args: &RunArgs) -> Result<Outcome> {
    let (engine, _) = load_engine(cfg, out, args)?;
    let recon = engine.reconstruct_split(args.split.into())?;
    fs::create_dir_all(out)?;
    for (id, array) in recon.iter() {
        write_dataset_reporting(out, &format!("reconstruct_{id}"), id, array)?;
    }
    Ok(Outcome::Done)
}

fn forecast(cfg: &RunConfig, out: &Path, args: &RunArgs, horizon: usize) -> Result<Outcome> {
    let (engine, manager) = load_engine(cfg, out, args)?;
    let rows = engine.preprocessing().sample_rows(args.split.into());
    if rows.is_empty() {
        return Err(ShredError::InvalidArgument(format!(
            "{:?} split is empty",
            args.split
        )));
    }
    let z = engine.sensor_to_latent(manager.measurements())?;
    let seed = z.select_rows(&rows);
    let latents = engine.forecast_latent(&seed, horizon)?;
    fs::create_dir_all(out)?;
    let d = engine.latent_dim();
    write_dataset_reporting(
        out,
        "forecast_latent",
        "latent",
        &FieldArray::new(vec![latents.rows(), d], latents.as_slice().to_vec())?,
    )?;
    if horizon == 0 {
        for meta in &engine.preprocessing().fields {
            let mut shape = vec![0];
            shape.extend_from_slice(&meta.spatial_shape);
            write_dataset_reporting(
                out,
                &format!("forecast_{}", meta.id),
                &meta.id,
                &FieldArray::zeros(shape),
            )?;
        }
    } else {
        for (id, array) in engine.decode(&latents)?.iter() {
            write_dataset_reporting(out, &format!("forecast_{id}"), id, array)?;
        }
    }
    Ok(Outcome::Done)
}

fn evaluate(cfg: &RunConfig, out: &Path, args: &RunArgs) -> Result<Outcome> {
    let (engine, manager) = load_engine(cfg, out, args)?;
    drop(manager);
    let truth: Vec<(String, FieldArray)> = cfg
        .fields
        .iter()
        .enumerate()
        .map(|(i, f)| Ok((f.id.clone(), load_field(cfg, i)?)))
        .collect::<Result<_>>()?;
    let refs: Vec<(&str, &FieldArray)> = truth.iter().map(|(id, a)| (id.as_str(), a)).collect();
    let metrics: BTreeMap<String, FieldMetrics> = engine.evaluate(&refs, args.split.into())?;
    fs::create_dir_all(out)?;
    write_json(&out.join("metrics.json"), &metrics)?;
    println!(
        "{:<16} {:>14} {:>14} {:>10}",
        "field", "mse", "rel. error", "snapshots"
    );
    for (id, m) in &metrics {
        println!(
            "{:<16} {:>14.6e} {:>14.6e} {:>10}",
            id, m.mse, m.mean_relative_error, m.snapshots
        );
    }
    if let Some(limit) = cfg.evaluate.max_relative_error {
        let worst = metrics
            .values()
            .map(|m| m.mean_relative_error)
            .fold(0.0, f64::max);
        if worst > limit {
            eprintln!("relative error {worst:.6e} exceeds the limit {limit:.6e}");
            return Ok(Outcome::ThresholdExceeded);
        }
    }
    Ok(Outcome::Done)
}

fn export_equations(model: &ShredModel, out: &Path) -> Result<Outcome> {
    let LatentForecaster::Sindy(m) = model.forecaster() else {
        return Err(ShredError::Unsupported(format!(
            "checkpoint carries a `{}` forecaster, not SINDy",
            model.forecaster().name()
        )));
    };
    fs::create_dir_all(out)?;
    write_equations(m, out)?;
    print!("{}", m.equations());
    Ok(Outcome::Done)
}

fn write_equations(m: &SindyModel, out: &Path) -> Result<()> {
    fs::write(out.join("equations.txt"), m.equations())?;
    Ok(fs::write(
        out.join("coefficients.csv"),
        m.coefficients_csv(),
    )?)
}
