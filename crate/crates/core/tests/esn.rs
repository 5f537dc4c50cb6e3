use esn_valley::esn::{normalize_state, train_readout};
use esn_valley::linalg::DenseMatrix;
use esn_valley::topology::TopologySpec;
use esn_valley::{Encoding, EsnHyperParams, EsnModel, FieldSeries, InputMap, ReservoirNetwork, ReservoirState, SeriesMeta};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn meta(dt: f64) -> SeriesMeta {
    SeriesMeta {
        dt,
        grid: Vec::new(),
        encoding: Encoding::RealScalar,
        system_tag: "test".into(),
    }
}

fn hyper(n: usize, m: usize, ridge: f64, transient: usize) -> EsnHyperParams {
    EsnHyperParams {
        n,
        input_dim: m,
        output_dim: m,
        input_scale: 1.0,
        transient_steps: transient,
        ridge,
        dt: 0.1,
    }
}

fn model(n: usize, m: usize, rho: f64, ridge: f64, seed: u64) -> EsnModel<f64> {
    let net = ReservoirNetwork::build(&TopologySpec::directed(n, 3.0, seed), seed + 1, rho).unwrap();
    let input = InputMap::generate(n, m, 1.0, seed + 2).unwrap();
    EsnModel::new(hyper(n, m, ridge, 10), input, net).unwrap()
}

fn random_series(m: usize, t: usize, seed: u64) -> FieldSeries<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..t).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    FieldSeries::from_columns(&cols, meta(0.1)).unwrap()
}

fn sine_series(m: usize, t: usize) -> FieldSeries<f64> {
    let cols: Vec<Vec<f64>> = (0..t)
        .map(|s| (0..m).map(|c| (0.1 * s as f64 + c as f64).sin() * 0.8).collect())
        .collect();
    FieldSeries::from_columns(&cols, meta(0.1)).unwrap()
}

#[test]
fn listen_matches_repeated_steps() {
    let esn = model(60, 3, 0.9, 1e-4, 5);
    let series = random_series(3, 100, 6);
    let listened = esn.listen(&series, ReservoirState::zeros(60)).unwrap();
    let mut state = ReservoirState::zeros(60);
    for t in 0..100 {
        state = esn.step(&state, &series.column(t)).unwrap();
        assert_eq!(state.step_index, t + 1);
        assert!(state.r.iter().all(|v| v.abs() < 1.0));
        assert_eq!(listened.states.column(t), normalize_state(&state.r), "column {t}");
    }
    assert_eq!(listened.final_state, state);
}

/// Ridge loss `Σ‖W r_t − v_t‖² + Γ‖W‖²` minimised row by row with conjugate
/// gradients on its gradient, without forming the normal equations.
fn ridge_by_descent(states: &DenseMatrix<f64>, targets: &DenseMatrix<f64>, ridge: f64, discard: usize) -> Vec<Vec<f64>> {
    let (n, t) = states.shape();
    let apply = |w: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = w.iter().map(|x| ridge * x).collect();
        for c in discard..t {
            let p: f64 = (0..n).map(|i| w[i] * states[(i, c)]).sum();
            for (i, o) in out.iter_mut().enumerate() {
                *o += p * states[(i, c)];
            }
        }
        out
    };
    (0..targets.rows())
        .map(|l| {
            let b: Vec<f64> = (0..n).map(|i| (discard..t).map(|c| states[(i, c)] * targets[(l, c)]).sum()).collect();
            let mut x = vec![0.0; n];
            let mut r = b.clone();
            let mut p = r.clone();
            let mut rr: f64 = r.iter().map(|v| v * v).sum();
            let b2 = rr;
            for _ in 0..20 * n {
                if rr <= 1e-30 * b2 {
                    break;
                }
                let ap = apply(&p);
                let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                let next: f64 = r.iter().map(|v| v * v).sum();
                for i in 0..n {
                    p[i] = r[i] + next / rr * p[i];
                }
                rr = next;
            }
            x
        })
        .collect()
}

#[test]
fn readout_matches_iterative_minimiser_and_normal_equations() {
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = DenseMatrix::from_fn(20, 200, |_, _| rng.gen_range(-1.0..1.0));
        let targets = DenseMatrix::from_fn(3, 200, |_, _| rng.gen_range(-2.0..2.0));
        let w = train_readout(&states, &targets, 1e-4, 10).unwrap();
        let oracle = ridge_by_descent(&states, &targets, 1e-4, 10);
        for l in 0..3 {
            let scale = oracle[l].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..20 {
                assert!((w[(l, i)] - oracle[l][i]).abs() <= 1e-6 * scale, "seed {seed} ({l},{i})");
            }
        }
        // (R R^T + Γ I) W^T = R V^T over the kept columns.
        let kept = DenseMatrix::from_fn(20, 190, |i, c| states[(i, c + 10)]);
        let v = DenseMatrix::from_fn(3, 190, |l, c| targets[(l, c + 10)]);
        let mut gram = kept.matmul(&kept.transpose()).unwrap();
        for i in 0..20 {
            gram[(i, i)] += 1e-4;
        }
        let lhs = gram.matmul(&w.transpose()).unwrap();
        let rhs = kept.matmul(&v.transpose()).unwrap();
        let scale = rhs.max_abs().max(1.0);
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-8 * scale);
    }
}

#[test]
fn closed_loop_reproduces_an_exactly_representable_trajectory() {
    // Generate data with a known readout, so that u(t+1) = W r'(t) exactly.
    let n = 12;
    let m = 2;
    let mut esn = model(n, m, 1.15, 0.0, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let known = DenseMatrix::from_fn(m, n, |_, _| rng.gen_range(-0.6..0.6));
    esn.readout = Some(known.clone());
    let u0 = vec![0.7, -0.4];
    let gen = esn
        .predict(Some(&FieldSeries::from_columns(std::slice::from_ref(&u0), meta(0.1)).unwrap()), ReservoirState::zeros(n), 300)
        .unwrap();
    let mut cols = vec![u0];
    cols.extend((0..gen.series.len()).map(|t| gen.series.column(t)));
    let data = FieldSeries::from_columns(&cols, meta(0.1)).unwrap();

    esn.readout = None;
    let train = data.slice(0..200).unwrap();
    let report = esn.fit(&train, ReservoirState::zeros(n)).unwrap();
    let fitted = esn.readout.as_ref().unwrap();
    assert!(data.column(299).iter().any(|v| v.abs() > 0.05), "trajectory decayed");
    assert!(fitted.max_abs_diff(&known).unwrap() < 1e-8);

    // Warm start continues the trajectory; cold start replays the training window.
    let warm = esn.predict(None, report.final_state, 100).unwrap();
    for t in 0..100 {
        for (a, b) in warm.series.column(t).iter().zip(data.column(200 + t)) {
            assert!((a - b).abs() < 1e-8, "warm step {t}");
        }
    }
    let cold = esn.predict(Some(&train.slice(0..1).unwrap()), ReservoirState::zeros(n), 199).unwrap();
    for t in 0..199 {
        for (a, b) in cold.series.column(t).iter().zip(train.column(t + 1)) {
            assert!((a - b).abs() < 1e-8, "cold step {t}");
        }
    }
}

#[test]
fn cold_start_reports_warmup_error() {
    let mut esn = model(64, 4, 0.8, 1e-6, 31);
    let series = sine_series(4, 900);
    esn.fit(&series.slice(0..600).unwrap(), ReservoirState::zeros(64)).unwrap();
    let p = esn.predict(Some(&series.slice(600..700).unwrap()), ReservoirState::zeros(64), 50).unwrap();
    let w = p.warmup_rmse.unwrap();
    assert_eq!(w.len(), 99);
    assert!(w.iter().all(|v| v.is_finite()));
    assert!(w[98] < w[0], "spin-up should reduce the one-step error: {} vs {}", w[0], w[98]);
    assert_eq!(p.series.len(), 50);
    assert!(esn.predict(None, ReservoirState::zeros(64), 10).unwrap().warmup_rmse.is_none());
}

#[test]
fn training_and_prediction_are_bit_reproducible() {
    let series = sine_series(4, 500);
    let run = || {
        let mut esn = model(80, 4, 1.1, 1e-4, 41);
        let fit = esn.fit(&series, ReservoirState::zeros(80)).unwrap();
        let p = esn.predict(None, fit.final_state, 40).unwrap();
        (esn.readout.unwrap(), p.series)
    };
    let (w1, p1) = run();
    let (w2, p2) = run();
    assert!(w1.as_slice().iter().zip(w2.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(p1.data().as_slice().iter().zip(p2.data().as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn model_file_round_trip_is_bit_exact() {
    let mut esn = model(48, 4, 0.7, 1e-4, 51);
    esn.fit(&sine_series(4, 300), ReservoirState::zeros(48)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    esn.save(&path).unwrap();
    let back = EsnModel::<f64>::load(&path).unwrap();
    assert_eq!(back, esn);
    let bits = |m: &EsnModel<f64>| m.readout.as_ref().unwrap().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&esn));
}

#[test]
fn f32_pipeline_runs() {
    let net = ReservoirNetwork::<f32>::build(&TopologySpec::directed(32, 3.0, 1), 2, 0.5).unwrap();
    let input = InputMap::<f32>::generate(32, 2, 1.0, 3).unwrap();
    let mut esn = EsnModel::new(hyper(32, 2, 1e-2, 5), input, net).unwrap();
    let cols: Vec<Vec<f32>> = (0..200).map(|t| vec![(0.2 * t as f32).sin(), (0.2 * t as f32).cos()]).collect();
    let series = FieldSeries::from_columns(&cols, meta(0.2)).unwrap();
    let fit = esn.fit(&series, ReservoirState::zeros(32)).unwrap();
    let p = esn.predict(None, fit.final_state, 20).unwrap();
    assert_eq!(p.series.len(), 20);
    assert!(p.series.data().is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn larger_ridge_never_grows_the_readout(seed in any::<u64>(), g in 1e-8f64..1.0, factor in 1.0f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = DenseMatrix::from_fn(10, 60, |_, _| rng.gen_range(-1.0..1.0));
        let targets = DenseMatrix::from_fn(2, 60, |_, _| rng.gen_range(-1.0..1.0));
        let small = train_readout(&states, &targets, g, 0).unwrap().frobenius_norm();
        let large = train_readout(&states, &targets, g * factor, 0).unwrap().frobenius_norm();
        prop_assert!(large <= small * (1.0 + 1e-10));
    }

    #[test]
    fn states_stay_inside_unit_cube(seed in any::<u64>(), rho in 0.0f64..3.0) {
        let esn = model(40, 2, rho, 1e-4, seed % 1000);
        let series = random_series(2, 30, seed);
        let l = esn.listen(&series, ReservoirState::zeros(40)).unwrap();
        prop_assert!(l.final_state.r.iter().all(|v| v.abs() < 1.0));
        prop_assert!(l.states.as_slice().iter().all(|v| v.abs() < 1.0));
    }
}
