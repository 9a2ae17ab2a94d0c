use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shred::data::{SequenceDataset, Sequences};
use shred::forecast::{LatentForecaster, SindyLibrary, SindyModel};
use shred::model::{Activation, CellKind, ModelConfig, ShredModel, TrainConfig};
use shred::Matrix;

fn small_config(
    cell: CellKind,
    s: usize,
    h: usize,
    layers: usize,
    dec: Vec<usize>,
    out: usize,
    seed: u64,
) -> ModelConfig {
    ModelConfig {
        cell,
        input_size: s,
        hidden_size: h,
        num_layers: layers,
        decoder_layers: dec,
        activation: Activation::Tanh,
        output_size: out,
        seed,
    }
}

fn random_sequences(n: usize, lags: usize, s: usize, seed: u64) -> Sequences {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * lags * s)
        .map(|_| r.random_range(0.0..1.0))
        .collect();
    Sequences::new(n, lags, s, data).unwrap()
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn zero_weights_give_zero_latent() {
    for cell in [CellKind::Gru, CellKind::Lstm] {
        let mut m = ShredModel::new(small_config(cell, 3, 5, 2, vec![4], 2, 1)).unwrap();
        for p in m.network_mut().params_mut() {
            p.fill(0.0);
        }
        let seq = Matrix::from_fn(6, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let (z, _) = m.encoder_forward(&seq).unwrap();
        assert_eq!(z, vec![0.0; 5]);
    }
}

#[test]
fn scalar_lstm_matches_hand_evaluation() {
    let mut m = ShredModel::new(small_config(CellKind::Lstm, 1, 1, 1, vec![], 1, 0)).unwrap();
    let layer = &mut m.network_mut().encoder[0];
    // gates (i, f, g, o)
    layer.w_ih.copy_from_slice(&[0.5, -0.3, 0.8, 0.1]);
    layer.w_hh.copy_from_slice(&[0.2, 0.4, -0.6, 0.7]);
    layer.b_ih.copy_from_slice(&[0.1, 0.2, 0.0, -0.1]);
    layer.b_hh.copy_from_slice(&[0.05, -0.05, 0.3, 0.0]);
    let x = 0.7;
    let i = sigmoid(0.5 * x + 0.15);
    let g = (0.8 * x + 0.3).tanh();
    let o = sigmoid(0.1 * x - 0.1);
    let c = i * g;
    let expected = o * c.tanh();
    let (z, _) = m
        .encoder_forward(&Matrix::from_rows(&[vec![x]]).unwrap())
        .unwrap();
    assert!((z[0] - expected).abs() < 1e-15, "{} vs {expected}", z[0]);

    // second step carries h and c
    let x2 = -0.4;
    let i2 = sigmoid(0.5 * x2 + 0.2 * expected + 0.15);
    let f2 = sigmoid(-0.3 * x2 + 0.4 * expected + 0.15);
    let g2 = (0.8 * x2 - 0.6 * expected + 0.3).tanh();
    let o2 = sigmoid(0.1 * x2 + 0.7 * expected - 0.1);
    let c2 = f2 * c + i2 * g2;
    let (z2, _) = m
        .encoder_forward(&Matrix::from_rows(&[vec![x], vec![x2]]).unwrap())
        .unwrap();
    assert!((z2[0] - o2 * c2.tanh()).abs() < 1e-15);
}

#[test]
fn scalar_gru_matches_hand_evaluation() {
    let mut m = ShredModel::new(small_config(CellKind::Gru, 1, 1, 1, vec![], 1, 0)).unwrap();
    let layer = &mut m.network_mut().encoder[0];
    // gates (r, z, n)
    layer.w_ih.copy_from_slice(&[0.3, -0.2, 0.9]);
    layer.w_hh.copy_from_slice(&[0.5, 0.6, -0.4]);
    layer.b_ih.copy_from_slice(&[0.1, 0.0, -0.2]);
    layer.b_hh.copy_from_slice(&[0.0, 0.1, 0.25]);
    let (x1, x2) = (0.6, -1.1);
    let step = |x: f64, h: f64| {
        let r = sigmoid(0.3 * x + 0.1 + 0.5 * h);
        let z = sigmoid(-0.2 * x + 0.6 * h + 0.1);
        let n = (0.9 * x - 0.2 + r * (-0.4 * h + 0.25)).tanh();
        (1.0 - z) * n + z * h
    };
    let expected = step(x2, step(x1, 0.0));
    let (z, _) = m
        .encoder_forward(&Matrix::from_rows(&[vec![x1], vec![x2]]).unwrap())
        .unwrap();
    assert!((z[0] - expected).abs() < 1e-15);
}

#[test]
fn identical_rows_in_any_order_give_identical_latents() {
    let m = ShredModel::new(small_config(CellKind::Gru, 2, 4, 1, vec![3], 2, 5)).unwrap();
    let a = vec![0.2, 0.9];
    let b = vec![0.5, 0.1];
    let s1 = Matrix::from_rows(&[a.clone(), a.clone(), b.clone()]).unwrap();
    let s2 = Matrix::from_rows(&[a.clone(), a, b]).unwrap();
    assert_eq!(
        m.encoder_forward(&s1).unwrap().0,
        m.encoder_forward(&s2).unwrap().0
    );
}

#[test]
fn encoder_rejects_bad_input() {
    let m = ShredModel::new(small_config(CellKind::Lstm, 2, 4, 1, vec![], 2, 5)).unwrap();
    assert!(m.encoder_forward(&Matrix::zeros(3, 3)).is_err());
    let mut bad = Matrix::zeros(3, 2);
    bad.set(1, 1, f64::NAN);
    assert!(m.encoder_forward(&bad).is_err());
    assert!(m.decoder_forward(&[0.0; 3]).is_err());
}

#[test]
fn decoder_special_cases() {
    let mut m = ShredModel::new(small_config(CellKind::Lstm, 2, 3, 1, vec![], 3, 5)).unwrap();
    let dense = &mut m.network_mut().decoder.layers[0];
    dense.w.fill(0.0);
    dense.b.copy_from_slice(&[1.0, -2.0, 0.5]);
    assert_eq!(
        m.decoder_forward(&[3.0, 4.0, 5.0]).unwrap(),
        vec![1.0, -2.0, 0.5]
    );
    let dense = &mut m.network_mut().decoder.layers[0];
    dense.b.fill(0.0);
    for k in 0..3 {
        dense.w[k * 3 + k] = 1.0;
    }
    assert_eq!(
        m.decoder_forward(&[3.0, 4.0, 5.0]).unwrap(),
        vec![3.0, 4.0, 5.0]
    );
}

/// Straightforward per-sample MLP evaluation used as an oracle.
fn oracle_decoder(m: &ShredModel, z: &[f64]) -> Vec<f64> {
    let layers = &m.network().decoder.layers;
    let mut x = z.to_vec();
    for (li, d) in layers.iter().enumerate() {
        let mut y = d.b.clone();
        for (o, yo) in y.iter_mut().enumerate() {
            for (i, xi) in x.iter().enumerate() {
                *yo += xi * d.w[i * d.output + o];
            }
        }
        if li + 1 < layers.len() {
            y = y.into_iter().map(|v| v.max(0.0)).collect();
        }
        x = y;
    }
    x
}

#[test]
fn decoder_matches_independent_forward() {
    let mut cfg = small_config(CellKind::Lstm, 2, 5, 1, vec![7, 6], 4, 21);
    cfg.activation = Activation::Relu;
    let m = ShredModel::new(cfg).unwrap();
    for seed in 0..5 {
        let z: Vec<f64> = random_matrix(1, 5, seed).into_vec();
        let got = m.decoder_forward(&z).unwrap();
        let want = oracle_decoder(&m, &z);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn loss_examples() {
    let m = ShredModel::new(small_config(CellKind::Gru, 2, 3, 1, vec![4], 2, 3)).unwrap();
    let seqs = random_sequences(5, 3, 2, 1);
    let out = m.predict(&seqs).unwrap();
    assert_eq!(m.loss(&seqs, &out, None, 0.0).unwrap(), 0.0);

    let one = seqs.select(&[2]);
    let o = m.predict(&one).unwrap();
    let delta = [0.3, -0.1];
    let t = Matrix::from_fn(1, 2, |_, j| o.get(0, j) + delta[j]);
    let expected = (0.09 + 0.01) / 2.0;
    assert!((m.loss(&one, &t, None, 0.0).unwrap() - expected).abs() < 1e-12);

    // identical windows give constant latents, so a zero Ξ has no residual
    let same = seqs.select(&[1, 1, 1, 1]);
    let sindy = SindyModel::new(SindyLibrary::new(1, true, 3), 0.2, 0.05).unwrap();
    let t = random_matrix(4, 2, 9);
    let pure = m.loss(&same, &t, None, 0.0).unwrap();
    assert!((m.loss(&same, &t, Some(&sindy), 1.0).unwrap() - pure).abs() < 1e-15);
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Largest analytic-vs-central-difference relative error over every parameter.
fn max_gradient_error(
    m: &mut ShredModel,
    seqs: &Sequences,
    t: &Matrix,
    sindy: Option<&SindyModel>,
    lambda: f64,
) -> f64 {
    let tr = m.forward_batch(seqs).unwrap();
    let (_, grads) = m.backward(&tr, t, sindy, lambda).unwrap();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for (gi, group) in grads.iter().enumerate() {
        for (k, &g) in group.iter().enumerate() {
            let orig = m.network().params()[gi][k];
            m.network_mut().params_mut()[gi][k] = orig + eps;
            let lp = m.loss(seqs, t, sindy, lambda).unwrap();
            m.network_mut().params_mut()[gi][k] = orig - eps;
            let lm = m.loss(seqs, t, sindy, lambda).unwrap();
            m.network_mut().params_mut()[gi][k] = orig;
            let fd = (lp - lm) / (2.0 * eps);
            worst = worst.max(rel_err(g, fd));
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for cell in [CellKind::Gru, CellKind::Lstm] {
        let mut m = ShredModel::new(small_config(cell, 2, 4, 1, vec![], 3, 7)).unwrap();
        let seqs = random_sequences(6, 5, 2, 2);
        let t = random_matrix(6, 3, 3);
        let e = max_gradient_error(&mut m, &seqs, &t, None, 0.0);
        assert!(e <= 1e-4, "{cell:?}: {e}");
    }
}

#[test]
fn gradients_with_depth_and_sindy_term() {
    for cell in [CellKind::Gru, CellKind::Lstm] {
        let mut m = ShredModel::new(small_config(cell, 2, 3, 2, vec![5], 2, 11)).unwrap();
        let seqs = random_sequences(7, 4, 2, 4);
        let t = random_matrix(7, 2, 5);
        let mut sindy = SindyModel::new(SindyLibrary::new(2, true, 3), 0.2, 0.05).unwrap();
        sindy.coefficients = random_matrix(sindy.library.len(), 3, 6);
        let e = max_gradient_error(&mut m, &seqs, &t, Some(&sindy), 0.7);
        assert!(e <= 1e-4, "{cell:?}: {e}");
    }
}

#[test]
fn zero_loss_gives_zero_gradients() {
    let m = ShredModel::new(small_config(CellKind::Lstm, 2, 4, 2, vec![6], 3, 8)).unwrap();
    let seqs = random_sequences(4, 3, 2, 1);
    let out = m.predict(&seqs).unwrap();
    let tr = m.forward_batch(&seqs).unwrap();
    let (loss, grads) = m.backward(&tr, &out, None, 0.0).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.iter().flatten().all(|g| *g == 0.0));
}

#[test]
fn duplicated_batch_keeps_mean_gradient() {
    let m = ShredModel::new(small_config(CellKind::Gru, 2, 4, 1, vec![5], 3, 8)).unwrap();
    let seqs = random_sequences(4, 3, 2, 1);
    let t = random_matrix(4, 3, 2);
    let (_, g1) = m
        .backward(&m.forward_batch(&seqs).unwrap(), &t, None, 0.0)
        .unwrap();
    let doubled = seqs.select(&[0, 1, 2, 3, 0, 1, 2, 3]);
    let t2 = Matrix::vstack(&[&t, &t]).unwrap();
    let (_, g2) = m
        .backward(&m.forward_batch(&doubled).unwrap(), &t2, None, 0.0)
        .unwrap();
    for (a, b) in g1.iter().flatten().zip(g2.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

fn dataset(seqs: Sequences, targets: Matrix) -> SequenceDataset {
    let rows = (0..seqs.len()).collect();
    SequenceDataset {
        sequences: seqs,
        targets,
        rows,
    }
}

/// Targets are a fixed linear map of the last sensor row.
fn linear_task(n: usize, seed: u64) -> SequenceDataset {
    let (lags, s) = (4, 3);
    let seqs = random_sequences(n, lags, s, seed);
    let a = [[0.5, -0.2, 0.3], [0.1, 0.4, -0.3]];
    let targets = Matrix::from_fn(n, 2, |i, o| {
        let last = &seqs.window(i)[(lags - 1) * s..];
        (0..s).map(|k| a[o][k] * last[k]).sum()
    });
    dataset(seqs, targets)
}

#[test]
fn zero_learning_rate_keeps_weights() {
    let mut m = ShredModel::new(small_config(CellKind::Lstm, 3, 4, 1, vec![5], 2, 1)).unwrap();
    let before = m.clone();
    let cfg = TrainConfig {
        epochs: 1,
        learning_rate: 0.0,
        ..TrainConfig::default()
    };
    let report = m
        .fit(&linear_task(40, 1), &linear_task(10, 2), &cfg)
        .unwrap();
    assert_eq!(report.val_errors.len(), 1);
    assert_eq!(m, before);
}

#[test]
fn learns_a_linear_map_of_the_last_reading() {
    let mut cfg = small_config(CellKind::Lstm, 3, 16, 1, vec![32], 2, 4);
    cfg.activation = Activation::Relu;
    let mut m = ShredModel::new(cfg).unwrap();
    let train = linear_task(256, 10);
    let val = linear_task(64, 11);
    let tc = TrainConfig {
        epochs: 200,
        batch_size: 32,
        patience: 200,
        ..TrainConfig::default()
    };
    let report = m.fit(&train, &val, &tc).unwrap();
    assert!(report.val_mse <= 1e-3, "val mse {}", report.val_mse);
    let best = report.val_errors[report.best_epoch];
    assert!(report.val_errors.iter().all(|v| best <= *v));
    assert!((m.evaluate(&val).unwrap() - report.val_mse).abs() < 1e-12);
}

#[test]
fn early_stopping_restores_first_epoch() {
    let mut m = ShredModel::new(small_config(CellKind::Gru, 3, 8, 1, vec![], 2, 2)).unwrap();
    // training pulls every output up towards 1; validation wants -5
    let mut train = linear_task(128, 3);
    train.targets = Matrix::from_fn(128, 2, |_, _| 1.0);
    let mut val = linear_task(32, 4);
    val.targets = Matrix::from_fn(32, 2, |_, _| -5.0);
    let cfg = TrainConfig {
        epochs: 10,
        patience: 1,
        learning_rate: 1e-2,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let report = m.fit(&train, &val, &cfg).unwrap();
    assert_eq!(report.val_errors.len(), 2, "{:?}", report.val_errors);
    assert!(report.val_errors[1] >= report.val_errors[0]);
    assert_eq!(report.best_epoch, 0);
    assert!((m.evaluate(&val).unwrap() - report.val_errors[0]).abs() < 1e-12);
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let mut m = ShredModel::new(small_config(CellKind::Lstm, 3, 6, 1, vec![8], 2, 9)).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 3,
            ..TrainConfig::default()
        };
        let r = m
            .fit(&linear_task(64, 1), &linear_task(16, 2), &cfg)
            .unwrap();
        (r, m)
    };
    let (r1, m1) = run();
    let (r2, m2) = run();
    assert_eq!(r1, r2);
    assert_eq!(m1, m2);
}

#[test]
fn evaluate_examples() {
    let mut m = ShredModel::new(small_config(CellKind::Lstm, 3, 4, 1, vec![], 2, 1)).unwrap();
    let ds = linear_task(10, 1);
    let perfect = dataset(ds.sequences.clone(), m.predict(&ds.sequences).unwrap());
    assert_eq!(m.evaluate(&perfect).unwrap(), 0.0);
    assert!(
        (m.evaluate(&ds).unwrap() - m.loss(&ds.sequences, &ds.targets, None, 0.0).unwrap()).abs()
            < 1e-12
    );

    let dense = &mut m.network_mut().decoder.layers[0];
    dense.w.fill(0.0);
    dense.b.fill(0.0);
    let ones = dataset(ds.sequences.clone(), Matrix::from_fn(10, 2, |_, _| 1.0));
    assert_eq!(m.evaluate(&ones).unwrap(), 1.0);
    let empty = dataset(Sequences::empty(4, 3), Matrix::zeros(0, 2));
    assert!(m.evaluate(&empty).is_err());
}

#[test]
fn fit_rejects_bad_inputs() {
    let mut m = ShredModel::new(small_config(CellKind::Lstm, 3, 4, 1, vec![], 2, 1)).unwrap();
    let ds = linear_task(10, 1);
    let empty = dataset(Sequences::empty(4, 3), Matrix::zeros(0, 2));
    assert!(m.fit(&empty, &ds, &TrainConfig::default()).is_err());
    let bad = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    assert!(m.fit(&ds, &ds, &bad).is_err());
    let wide = dataset(random_sequences(10, 4, 5, 1), Matrix::zeros(10, 2));
    assert!(m.fit(&wide, &ds, &TrainConfig::default()).is_err());
}

#[test]
fn exploding_training_reports_numeric_error() {
    let mut m = ShredModel::new(small_config(CellKind::Gru, 3, 4, 1, vec![], 2, 1)).unwrap();
    let mut ds = linear_task(16, 1);
    ds.targets = ds.targets.scaled(1e200);
    let err = m.fit(&ds, &ds, &TrainConfig::default()).unwrap_err();
    assert!(matches!(err, shred::ShredError::Numeric(_)), "{err}");
}

#[test]
fn sindy_training_leaves_thresholded_coefficients() {
    let mut m = ShredModel::new(small_config(CellKind::Gru, 3, 3, 1, vec![8], 2, 1)).unwrap();
    let sindy = SindyModel::new(SindyLibrary::new(1, true, 3), 0.2, 0.05).unwrap();
    m.set_forecaster(LatentForecaster::Sindy(sindy)).unwrap();
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 16,
        sindy_regularization: 1.0,
        sindy_thres_epoch: 2,
        ..TrainConfig::default()
    };
    m.fit(&linear_task(64, 1), &linear_task(16, 2), &cfg)
        .unwrap();
    let LatentForecaster::Sindy(fitted) = m.forecaster() else {
        panic!("forecaster replaced");
    };
    assert!(fitted
        .coefficients
        .as_slice()
        .iter()
        .all(|v| *v == 0.0 || v.abs() >= 0.05));

    let wrong = SindyModel::new(SindyLibrary::new(1, true, 4), 0.2, 0.05).unwrap();
    assert!(m.set_forecaster(LatentForecaster::Sindy(wrong)).is_err());
}
