use dronetour::estimators::{calibrate_mk, DroneTimeEstimator, DroneTimeModel};
use dronetour::geometry::Point2;
use dronetour::physics::DronePhysicsParams;
use dronetour::predictor::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_net(rng: &mut ChaCha8Rng, activation: Activation) -> Mlp {
    let h = rng.gen_range(1..=8);
    let mut m = Mlp::zeros(h, activation);
    let theta: Vec<f64> = (0..m.params_flat().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    m.set_params_flat(&theta);
    m
}

fn synthetic(count: usize, seed: u64, label: impl Fn(&[f64; 6]) -> f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..count)
        .map(|_| {
            let f: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1000.0..1000.0));
            Row { features: f, label: label(&f) }
        })
        .collect();
    Dataset { rows, provenance: None }
}

fn mse(m: &Mlp, ds: &Dataset) -> f64 {
    ds.rows.iter().map(|r| (m.predict_unclamped(&r.features) - r.label).powi(2)).sum::<f64>() / ds.len() as f64
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for net in 0..20 {
        let act = if net % 2 == 0 { Activation::Relu } else { Activation::Identity };
        let m = random_net(&mut rng, act);
        let rows = rng.gen_range(1..=20);
        let xs: Vec<[f64; 6]> = (0..rows).map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0))).collect();
        let ys: Vec<f64> = (0..rows).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let alpha = rng.gen_range(0.0..0.5);
        let (_, grad) = loss_and_gradient(&m, &xs, &ys, alpha);
        let theta = m.params_flat();
        let h = 1e-6;
        let numeric: Vec<f64> = (0..theta.len())
            .map(|k| {
                let mut p = m.clone();
                let mut t = theta.clone();
                t[k] += h;
                p.set_params_flat(&t);
                let up = loss_and_gradient(&p, &xs, &ys, alpha).0;
                t[k] -= 2.0 * h;
                p.set_params_flat(&t);
                let down = loss_and_gradient(&p, &xs, &ys, alpha).0;
                (up - down) / (2.0 * h)
            })
            .collect();
        let diff: f64 = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        assert!(diff <= 1e-4 * scale.max(1e-12), "net {net}: relative error {}", diff / scale);
    }
}

#[test]
fn linear_labels_are_learned_exactly() {
    let label = |f: &[f64; 6]| 100.0 + 0.05 * f[0] - 0.02 * f[1] + 0.03 * f[2] + 0.01 * f[3] - 0.04 * f[4] + 0.02 * f[5];
    let ds = synthetic(2000, 1, label);
    let (train_set, test) = ds.split(0.2, 3);
    let cfg = TrainConfig {
        hidden_size: 8,
        activation: Activation::Identity,
        alpha: 0.0,
        batch_size: 50,
        max_epochs: 150,
        base_lr: 3e-3,
        ..TrainConfig::default()
    };
    let m = train(&train_set, &cfg).unwrap();
    let mean = test.rows.iter().map(|r| r.label).sum::<f64>() / test.len() as f64;
    let var = test.rows.iter().map(|r| (r.label - mean).powi(2)).sum::<f64>() / test.len() as f64;
    assert!(mse(&m, &test) <= 1e-4 * var, "mse {} var {var}", mse(&m, &test));
}

#[test]
fn training_reduces_loss_deterministically() {
    let ds = synthetic(300, 2, |f| (f[0] - f[2]).abs() * 0.01 + (f[1] - f[3]).abs() * 0.02);
    let cfg = TrainConfig {
        hidden_size: 16,
        max_epochs: 30,
        ..TrainConfig::default()
    };
    let (a, ra) = train_with_report(&ds, &cfg).unwrap();
    let (b, rb) = train_with_report(&ds, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.final_loss.to_bits(), rb.final_loss.to_bits());
    assert!(ra.final_loss <= ra.initial_loss);
}

#[test]
fn translation_of_features_does_not_change_holdout_error() {
    let label = |f: &[f64; 6]| (f[0] - f[2]).hypot(f[1] - f[3]) * 0.02 + 30.0;
    let ds = synthetic(400, 4, label);
    let shift = [2048.0, -4096.0, 1024.0, 512.0, -2048.0, 8192.0];
    let moved = Dataset {
        rows: ds
            .rows
            .iter()
            .map(|r| Row {
                features: std::array::from_fn(|i| r.features[i] + shift[i]),
                label: r.label,
            })
            .collect(),
        provenance: None,
    };
    let cfg = TrainConfig {
        hidden_size: 12,
        max_epochs: 20,
        ..TrainConfig::default()
    };
    let (tr, ho) = ds.split(0.25, 9);
    let (tr2, ho2) = moved.split(0.25, 9);
    let a = mse(&train(&tr, &cfg).unwrap(), &ho);
    let b = mse(&train(&tr2, &cfg).unwrap(), &ho2);
    assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
}

#[test]
fn model_file_round_trip() {
    let ds = synthetic(200, 5, |f| f[0].abs() * 0.01);
    let cfg = TrainConfig {
        hidden_size: 10,
        max_epochs: 5,
        ..TrainConfig::default()
    };
    let m = train(&ds, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&path, &m, Some(&cfg)).unwrap();
    let (back, back_cfg) = load_model(&path).unwrap();
    assert_eq!(back_cfg, Some(cfg));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let f: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-3000.0..3000.0));
        assert_eq!(m.predict(&f).to_bits(), back.predict(&f).to_bits());
    }
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(PredictorError::Parse { .. })));
    std::fs::write(&path, text.replacen("\"version\": 1", "\"version\": 99", 1)).unwrap();
    assert!(matches!(load_model(&path), Err(PredictorError::Incompatible { found: 99, .. })));
}

#[test]
fn grid_search_prefers_relu_on_curved_labels() {
    let ds = synthetic(600, 7, |f| (f[0] * f[0] + f[1] * f[1]).sqrt() * 0.05 + (f[4] - f[2]).abs() * 0.03);
    let base = TrainConfig {
        max_epochs: 100,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let grid = base.lattice(&[32], &[Activation::Identity, Activation::Relu], &[1e-4], &[LrSchedule::Constant]);
    let (best, report) = grid_search(&ds, &grid, 0.2).unwrap();
    assert_eq!(report.len(), 2, "{report:?}");
    assert_eq!(best.activation, Activation::Relu, "{report:?}");
    assert!(report[1].holdout_mse < report[0].holdout_mse);
    let (single, rows) = grid_search(&ds, &grid[..1], 0.2).unwrap();
    assert_eq!(single, grid[0]);
    assert_eq!(rows.len(), 1);
    assert!(matches!(grid_search(&ds, &[], 0.2), Err(PredictorError::EmptyGrid)));
}

#[test]
fn labels_respect_the_vertical_cycle() {
    let p = DronePhysicsParams::default();
    let ds = generate_training_data(&Region::square(Point2::new(0.0, 0.0), 5000.0), 1000, &p, &[], 3).unwrap();
    assert_eq!(ds.len(), 1000);
    let up = p.cruise_alt - p.truck_bed_alt;
    let cycle = up / p.climb_max + p.cruise_alt / p.descent_max + p.cruise_alt / p.climb_max + up / p.descent_max;
    for r in &ds.rows {
        assert!(r.label >= cycle - 1e-9, "label {} below cycle {cycle}", r.label);
    }
    let a = generate_training_data(&Region::square(Point2::new(0.0, 0.0), 5000.0), 1, &p, &[], 42).unwrap();
    let b = generate_training_data(&Region::square(Point2::new(0.0, 0.0), 5000.0), 1, &p, &[], 42).unwrap();
    assert_eq!(a, b);
}

#[test]
fn calibrated_factor_exceeds_one() {
    let p = DronePhysicsParams::default();
    let ds = generate_training_data(&Region::square(Point2::new(0.0, 0.0), 5000.0), 5000, &p, &[], 11).unwrap();
    let c = calibrate_mk(&ds, p.v_max).unwrap();
    assert!(c > 1.0, "factor {c}");
}

proptest! {
    #[test]
    fn k_and_mk_invariants(
        pts in prop::array::uniform6(-5000.0f64..5000.0),
        shift in prop::array::uniform2(-1e4f64..1e4),
        speed in 1.0f64..50.0,
        c in 0.5f64..3.0,
    ) {
        let s = Point2::new(pts[0], pts[1]);
        let d = Point2::new(pts[2], pts[3]);
        let e = Point2::new(pts[4], pts[5]);
        let mv = |p: Point2| Point2::new(p.x + shift[0], p.y + shift[1]);
        let k = DroneTimeEstimator::k(speed).unwrap();
        let mk = DroneTimeEstimator::mk(speed, c).unwrap();
        let base = k.estimate(s, d, e);
        prop_assert!(base >= 0.0);
        prop_assert!((base - k.estimate(e, d, s)).abs() <= 1e-12 * base.max(1.0));
        prop_assert!((base - k.estimate(mv(s), mv(d), mv(e))).abs() <= 1e-9 * base.max(1.0));
        let scaled = mk.estimate(s, d, e);
        prop_assert!((scaled - c * base).abs() <= 1e-12 * scaled.max(1.0));
        prop_assert!((mk.estimate(mv(s), mv(d), mv(e)) - scaled).abs() <= 1e-9 * scaled.max(1.0));
    }

    #[test]
    fn predictions_are_never_negative(seed in 0u64..1000, f in prop::array::uniform6(-1e4f64..1e4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_net(&mut rng, Activation::Relu);
        prop_assert!(m.predict(&f) >= 0.0);
        let p = DroneTimeEstimator::p(m);
        prop_assert!(p.estimate(Point2::new(f[0], f[1]), Point2::new(f[2], f[3]), Point2::new(f[4], f[5])) >= 0.0);
    }
}
