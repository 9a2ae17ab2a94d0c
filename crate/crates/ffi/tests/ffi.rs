use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use shred::data::{
    Compression, DataManager, FieldArray, ManagerConfig, SensorLocation, SensorSource,
};
use shred::engine::Engine;
use shred::forecast::{LatentForecaster, SindyLibrary, SindyModel};
use shred::io::{load_checkpoint, save_checkpoint};
use shred::synthetic::traveling_wave;
use shred::Matrix;
use shred_ffi::*;

const LOCATIONS: [usize; 4] = [1, 2, 3, 0];

fn wave() -> FieldArray {
    traveling_wave(4, 5, 40, 0.5, 6.0).unwrap()
}

fn ok(s: ShredStatus) {
    assert_eq!(s, ShredStatus::Ok, "{}", last_error());
}

fn last_error() -> String {
    let p = shred_last_error();
    if p.is_null() {
        return String::new();
    }
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn stationary() -> ShredSensors {
    ShredSensors {
        kind: ShredSensorKind::Stationary,
        count: 2,
        seed: 0,
        locations: LOCATIONS.as_ptr(),
    }
}

fn svd(modes: usize) -> ShredCompression {
    ShredCompression {
        kind: ShredCompressionKind::Svd,
        modes,
        kx: 0,
        ky: 0,
    }
}

unsafe fn ffi_manager() -> *mut ShredManager {
    let truth = wave();
    let mut m = ptr::null_mut();
    ok(shred_manager_new(3, 0.6, 0.2, 0.2, false, 0, &mut m));
    let id = CString::new("w").unwrap();
    ok(shred_manager_add_field(
        m,
        id.as_ptr(),
        truth.data().as_ptr(),
        truth.shape().as_ptr(),
        3,
        stationary(),
        svd(3),
    ));
    ok(shred_manager_prepare(m));
    m
}

/// The same manager built directly on the library.
fn core_manager() -> DataManager {
    let mut m = DataManager::new(ManagerConfig::new(3, 0.6, 0.2, 0.2).with_seed(0)).unwrap();
    let sensors = SensorSource::Explicit(vec![
        SensorLocation::Stationary(vec![1, 2]),
        SensorLocation::Stationary(vec![3, 0]),
    ]);
    m.add_data(wave(), "w", sensors, Compression::Svd(3))
        .unwrap();
    m.prepare().unwrap();
    m
}

unsafe fn trained_model(m: *const ShredManager) -> *mut ShredModel {
    let mut model = ptr::null_mut();
    let decoder = [6usize];
    ok(shred_model_new(
        ShredCell::Lstm,
        2,
        4,
        1,
        decoder.as_ptr(),
        1,
        ShredActivation::Relu,
        3,
        5,
        &mut model,
    ));
    let mut cfg = shred_train_config_default();
    cfg.epochs = 4;
    cfg.batch_size = 8;
    let mut val = f64::NAN;
    ok(shred_model_fit(model, m, &cfg, &mut val));
    assert!(val.is_finite() && val >= 0.0);
    model
}

fn path_c(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn handles_match_the_library() {
    unsafe {
        let m = ffi_manager();
        let (mut input, mut output) = (0, 0);
        ok(shred_manager_input_width(m, &mut input));
        ok(shred_manager_output_width(m, &mut output));
        assert_eq!((input, output), (2, 3));

        let model = trained_model(m);
        let mut engine = ptr::null_mut();
        ok(shred_engine_new(m, model, &mut engine));
        let mut dim = 0;
        ok(shred_engine_latent_dim(engine, &mut dim));
        assert_eq!(dim, 4);

        let dir = tempfile::tempdir().unwrap();
        let ckpt = dir.path().join("m.shrd");
        ok(shred_model_save(model, path_c(&ckpt).as_ptr()));
        let cm = core_manager();
        let reference = Engine::from_manager(&cm, load_checkpoint(&ckpt).unwrap()).unwrap();

        let readings = cm.measurements();
        let mut z = vec![0.0; readings.rows() * 4];
        ok(shred_engine_sensor_to_latent(
            engine,
            readings.as_slice().as_ptr(),
            readings.rows(),
            2,
            z.as_mut_ptr(),
            z.len(),
        ));
        let want = reference.sensor_to_latent(readings).unwrap();
        assert_eq!(z, want.as_slice());

        let mut size = 0;
        ok(shred_engine_field_size(engine, 0, &mut size));
        assert_eq!(size, 20);
        let mut fields = vec![0.0; readings.rows() * size];
        ok(shred_engine_decode(
            engine,
            z.as_ptr(),
            readings.rows(),
            0,
            fields.as_mut_ptr(),
            fields.len(),
        ));
        assert_eq!(
            fields,
            reference.decode(&want).unwrap().get("w").unwrap().data()
        );

        shred_engine_free(engine);
        shred_model_free(model);
        shred_manager_free(m);
    }
}

#[test]
fn engine_loads_from_checkpoint_and_preprocessing() {
    let cm = core_manager();
    let mut model = shred::model::ShredModel::new(shred::model::ModelConfig {
        cell: shred::model::CellKind::Gru,
        input_size: 2,
        hidden_size: 2,
        num_layers: 1,
        decoder_layers: vec![4],
        activation: shred::model::Activation::Relu,
        output_size: 3,
        seed: 1,
    })
    .unwrap();
    let mut sindy = SindyModel::new(SindyLibrary::new(1, false, 2), 0.1, 0.0).unwrap();
    sindy.coefficients =
        Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
    model
        .set_forecaster(LatentForecaster::Sindy(sindy))
        .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let (ckpt, prep) = (
        dir.path().join("m.shrd"),
        dir.path().join("preprocessing.json"),
    );
    save_checkpoint(&ckpt, &model).unwrap();
    std::fs::write(
        &prep,
        serde_json::to_string(&cm.preprocessing().unwrap()).unwrap(),
    )
    .unwrap();
    let reference = Engine::from_manager(&cm, model).unwrap();

    unsafe {
        let mut engine = ptr::null_mut();
        ok(shred_engine_load(
            path_c(&ckpt).as_ptr(),
            path_c(&prep).as_ptr(),
            &mut engine,
        ));
        let (mut count, mut width) = (0, 0);
        ok(shred_engine_field_count(engine, &mut count));
        ok(shred_engine_input_width(engine, &mut width));
        assert_eq!((count, width), (1, 2));

        let seed = [0.3, -0.2, 0.5, 0.1];
        let mut out = vec![0.0; 10];
        ok(shred_engine_forecast(
            engine,
            seed.as_ptr(),
            2,
            5,
            out.as_mut_ptr(),
            out.len(),
        ));
        let want = reference
            .forecast_latent(&Matrix::from_vec(2, 2, seed.to_vec()).unwrap(), 5)
            .unwrap();
        assert_eq!(out, want.as_slice());
        ok(shred_engine_forecast(
            engine,
            seed.as_ptr(),
            2,
            0,
            ptr::null_mut(),
            0,
        ));
        shred_engine_free(engine);

        let missing = path_c(&dir.path().join("nope.shrd"));
        let mut engine = ptr::null_mut();
        assert_eq!(
            shred_engine_load(missing.as_ptr(), path_c(&prep).as_ptr(), &mut engine),
            ShredStatus::Io
        );
        assert!(engine.is_null());
        std::fs::write(&prep, "{").unwrap();
        assert_eq!(
            shred_engine_load(path_c(&ckpt).as_ptr(), path_c(&prep).as_ptr(), &mut engine),
            ShredStatus::Format
        );
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    std::thread::spawn(|| assert!(shred_last_error().is_null()))
        .join()
        .unwrap();
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(
            shred_manager_new(3, 0.9, 0.2, 0.1, false, 0, &mut m),
            ShredStatus::InvalidArgument
        );
        assert!(m.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            shred_manager_new(3, 0.6, 0.2, 0.2, false, 0, ptr::null_mut()),
            ShredStatus::NullPointer
        );
        assert!(last_error().contains("out"), "{}", last_error());

        let m = ffi_manager();
        let truth = wave();
        let id = CString::new("w").unwrap();
        let status = shred_manager_add_field(
            m,
            id.as_ptr(),
            truth.data().as_ptr(),
            truth.shape().as_ptr(),
            3,
            stationary(),
            svd(3),
        );
        assert_eq!(status, ShredStatus::InvalidArgument);
        assert!(
            last_error().contains("already registered"),
            "{}",
            last_error()
        );
        assert_eq!(
            shred_manager_prepare(ptr::null_mut()),
            ShredStatus::NullPointer
        );

        let model = trained_model(m);
        let mut engine = ptr::null_mut();
        ok(shred_engine_new(m, model, &mut engine));
        let readings = [0.5; 12];
        let mut small = vec![0.0; 3];
        assert_eq!(
            shred_engine_sensor_to_latent(
                engine,
                readings.as_ptr(),
                6,
                2,
                small.as_mut_ptr(),
                small.len()
            ),
            ShredStatus::Shape
        );
        assert!(last_error().contains("buffer"), "{}", last_error());
        assert_eq!(
            shred_engine_sensor_to_latent(
                engine,
                readings.as_ptr(),
                4,
                3,
                small.as_mut_ptr(),
                small.len()
            ),
            ShredStatus::Shape
        );
        let bad = [f64::NAN; 4];
        let mut out = vec![0.0; 8];
        assert_eq!(
            shred_engine_sensor_to_latent(engine, bad.as_ptr(), 2, 2, out.as_mut_ptr(), 8),
            ShredStatus::NonFinite
        );
        assert_eq!(
            shred_engine_forecast(engine, out.as_ptr(), 1, 2, small.as_mut_ptr(), 8),
            ShredStatus::InvalidArgument
        );
        let mut size = 0;
        assert_eq!(
            shred_engine_field_size(engine, 1, &mut size),
            ShredStatus::InvalidArgument
        );

        let mut fresh = ptr::null_mut();
        ok(shred_manager_new(3, 0.6, 0.2, 0.2, false, 0, &mut fresh));
        let cfg = shred_train_config_default();
        assert_eq!(
            shred_model_fit(model, fresh, &cfg, ptr::null_mut()),
            ShredStatus::InvalidArgument
        );
        assert!(last_error().contains("prepare"), "{}", last_error());

        shred_engine_free(engine);
        shred_model_free(model);
        shred_manager_free(m);
        shred_manager_free(fresh);
        shred_manager_free(ptr::null_mut());
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(shred_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/shred.h"))
            .unwrap();
    let src =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 20);
    for name in exported {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}

/// Directory holding this build's `libshred_ffi.a`.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = artifact_dir().join("libshred_ffi.a");
    assert!(lib.is_file(), "{} not built", lib.display());
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let build = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("C compiler available");
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
