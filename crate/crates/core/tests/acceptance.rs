//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 6 and 10 need hours of CPU time and are skipped unless the
//! `--paper-scale` argument is given (`cargo test --test acceptance --
//! --paper-scale`) or `ESN_VALLEY_PAPER_SCALE=1` is set. `--only 5,8` (or
//! `ESN_VALLEY_CRITERIA=5,8`) restricts the run to the listed criteria.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use esn_valley::esn::train_readout;
use esn_valley::linalg::{CsrMatrix, DenseMatrix};
use esn_valley::sweep::{derive_seeds, SweepPlan, SweepResult, SweepSpec};
use esn_valley::systems::nlse::{self, BreatherVariant, NlseParams};
use esn_valley::systems::{CglParams, CglSolver, KseParams, KseSolver};
use esn_valley::topology::{assign_weights, generate_topology, scale_to_spectral_radius, TopologySpec};
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn config(name: &str) -> SweepSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    SweepSpec::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- 1

fn dense_radius(m: &CsrMatrix<f64>) -> f64 {
    let n = m.rows();
    let mut d = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in m.triplets() {
        d[(i, j)] = v;
    }
    d.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn spectral_scaling() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let edges = generate_topology(&TopologySpec::directed(200, 3.0, seed)).map_err(err)?;
        let raw = assign_weights::<f64>(&edges, seed.wrapping_mul(0x9e37_79b9) + 1);
        for target in [0.1, 0.7, 1.4, 2.0] {
            let net = scale_to_spectral_radius(&raw, target).map_err(err)?;
            worst = worst.max((dense_radius(&net.weights) - target).abs() / target);
        }
    }
    Ok((worst <= 1e-6, format!("max relative error {worst:.2e} over 400 scaled matrices")))
}

// ---------------------------------------------------------------- 2

/// Conjugate gradients on the ridge loss gradient, one readout row at a
/// time, applying `Σ r rᵀ + Γ I` column by column.
fn minimise_ridge_loss(states: &DenseMatrix<f64>, targets: &DenseMatrix<f64>, ridge: f64) -> DenseMatrix<f64> {
    let (n, t) = states.shape();
    let apply = |w: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = w.iter().map(|x| ridge * x).collect();
        for c in 0..t {
            let p: f64 = (0..n).map(|i| w[i] * states[(i, c)]).sum();
            for (i, o) in out.iter_mut().enumerate() {
                *o += p * states[(i, c)];
            }
        }
        out
    };
    let mut w = DenseMatrix::zeros(targets.rows(), n);
    for l in 0..targets.rows() {
        let b: Vec<f64> = (0..n).map(|i| (0..t).map(|c| states[(i, c)] * targets[(l, c)]).sum()).collect();
        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let stop = rr * 1e-30;
        for _ in 0..10 * n {
            if rr <= stop {
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
        w.row_mut(l).copy_from_slice(&x);
    }
    w
}

fn ridge_correctness() -> Outcome {
    let mut worst = 0.0f64;
    for inst in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + inst);
        // Reservoir-like states: tanh of correlated drives.
        let states = DenseMatrix::from_fn(50, 500, |_, _| rng.gen_range(-1.5f64..1.5).tanh());
        let targets = DenseMatrix::from_fn(3, 500, |_, _| rng.gen_range(-1.0..1.0));
        let w = train_readout(&states, &targets, 1e-4, 0).map_err(err)?;
        let oracle = minimise_ridge_loss(&states, &targets, 1e-4);
        let rel = w.max_abs_diff(&oracle).unwrap() / oracle.max_abs();
        worst = worst.max(rel);
    }
    Ok((worst <= 1e-6, format!("max relative deviation {worst:.2e} over 10 instances (n=50, T=500, L=3)")))
}

// ---------------------------------------------------------------- 3

/// `|i ψ_x + ½ ψ_tt + |ψ|² ψ|` from Richardson-extrapolated central differences.
fn residual(psi: &dyn Fn(f64, f64) -> Complex<f64>, x: f64, t: f64) -> f64 {
    let dx = |h: f64| (psi(x + h, t) - psi(x - h, t)) / (2.0 * h);
    let dtt = |h: f64| (psi(x, t + h) - psi(x, t) * 2.0 + psi(x, t - h)) / (h * h);
    let (hx, ht) = (1e-3, 1e-2);
    let px = (dx(hx / 2.0) * 4.0 - dx(hx)) / 3.0;
    let ptt = (dtt(ht / 2.0) * 4.0 - dtt(ht)) / 3.0;
    let c = psi(x, t);
    (Complex::<f64>::i() * px + ptt * 0.5 + c * c.norm_sqr()).norm()
}

fn grid_residual(p: &NlseParams, steps: usize, psi: &dyn Fn(f64, f64) -> Complex<f64>) -> f64 {
    let grid = p.channel_grid();
    let mut worst = 0.0f64;
    for j in 0..steps {
        let s = p.start + p.dt * j as f64;
        for &c in &grid {
            let (x, t) = if p.role_swap { (s, c) } else { (c, s) };
            worst = worst.max(residual(psi, x, t));
        }
    }
    worst
}

fn nlse_validity() -> Outcome {
    let steps = config("ab_full.toml").truth_steps();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [NlseParams::akhmediev(), NlseParams::kuznetsov_ma()] {
        let chosen = nlse::select_breather_variant(&p).map_err(err)?.variant;
        for v in BreatherVariant::ALL {
            let a = p.a;
            let f = move |x: f64, t: f64| nlse::breather_value(a, v, x, t).unwrap_or(Complex::new(f64::NAN, f64::NAN));
            let r = grid_residual(&p, steps, &f);
            let pass = r < 1e-4;
            // The chosen variant must be the one satisfying the equation.
            ok &= pass == (v == chosen);
            if v == chosen {
                parts.push(format!("a={} {} {r:.1e}", a, v.label()));
            }
        }
        let field = nlse::generate::<f64>(&p, 200).map_err(err)?;
        let exact = nlse::field_fn(&p).map_err(err)?;
        let grid = p.channel_grid();
        for j in 0..200 {
            let s = p.start + p.dt * j as f64;
            for (i, &c) in grid.iter().enumerate() {
                let (x, t) = if p.role_swap { (s, c) } else { (c, s) };
                ok &= (field.at(j, i) - exact(x, t).map_err(err)?).norm() < 1e-12;
            }
        }
    }
    for (a1, a2) in [(0.14, 0.34), (0.42, 0.18)] {
        let p = NlseParams::collision(a1, a2);
        let f = move |x: f64, t: f64| nlse::collision_value(a1, a2, x, t).unwrap_or(Complex::new(f64::NAN, f64::NAN));
        let r = grid_residual(&p, steps, &f);
        ok &= r < 1e-4;
        parts.push(format!("collision({a1},{a2}) {r:.1e}"));
    }
    Ok((ok, format!("max residual over {steps} samples: {}", parts.join(", "))))
}

// ---------------------------------------------------------------- 4

fn order(e1: f64, e2: f64) -> f64 {
    (e1 / e2).log2()
}

fn etdrk4_quality() -> Outcome {
    let kp = KseParams {
        transient: 50.0,
        ..KseParams::default()
    };
    let mut spin = KseSolver::<f64>::new(kp.clone()).map_err(err)?;
    spin.advance_time(kp.transient).map_err(err)?;
    let u0 = spin.state();
    let kse = |substeps: usize| -> Result<Vec<f64>, String> {
        let mut s = KseSolver::<f64>::from_state(KseParams { substeps, ..kp.clone() }, &u0).map_err(err)?;
        s.advance_time(25.0).map_err(err)?;
        Ok(s.state())
    };
    let (a, b, c) = (kse(10)?, kse(20)?, kse(40)?);
    let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let kse_order = order(d(&a, &b), d(&b, &c));

    let cp = CglParams {
        integrate_dt: 1e-3,
        sample_dt: 1e-3,
        transient: 50.0,
        ..CglParams::default()
    };
    let mut warm = CglSolver::<f64>::new(cp.clone()).map_err(err)?;
    warm.advance_time(cp.transient).map_err(err)?;
    let v0 = warm.state();
    let cgle = |h: f64| -> Result<Vec<Complex<f64>>, String> {
        let p = CglParams {
            integrate_dt: h,
            sample_dt: h,
            ..cp.clone()
        };
        let mut s = CglSolver::<f64>::from_state(p, &v0).map_err(err)?;
        s.advance_time(1.0).map_err(err)?;
        Ok(s.state())
    };
    let (a, b, c) = (cgle(0.02)?, cgle(0.01)?, cgle(0.005)?);
    let dc = |x: &[Complex<f64>], y: &[Complex<f64>]| x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    let cgle_order = order(dc(&a, &b), dc(&b, &c));

    // Plane wave u = e^{-iβt} with the production time step.
    let pw = CglParams {
        sample_dt: 0.01,
        ..CglParams::default()
    };
    let beta = pw.beta_disp;
    let mut s = CglSolver::<f64>::from_state(pw.clone(), &vec![Complex::new(1.0, 0.0); pw.x_points]).map_err(err)?;
    let mut plane = 0.0f64;
    for k in 1..=100 {
        s.advance_time(0.01).map_err(err)?;
        let exact = Complex::from_polar(1.0, -beta * k as f64 * 0.01);
        plane = plane.max(s.state().iter().map(|z| (z - exact).norm()).fold(0.0, f64::max));
    }
    Ok((
        kse_order >= 3.5 && cgle_order >= 3.5 && plane < 1e-6,
        format!("KSE order {kse_order:.2}, CGLE order {cgle_order:.2}, plane-wave error {plane:.1e} on [0,1]"),
    ))
}

// ---------------------------------------------------------------- 5, 8

static KSE_SWEEP: OnceLock<Result<(SweepPlan, SweepResult), String>> = OnceLock::new();

fn kse_sweep() -> Result<&'static (SweepPlan, SweepResult), String> {
    KSE_SWEEP
        .get_or_init(|| {
            let plan = SweepPlan::new(config("kse_desk.toml")).map_err(err)?;
            let result = plan.run(None).map_err(err)?;
            Ok((plan, result))
        })
        .as_ref()
        .map_err(Clone::clone)
}

fn index_of(grid: &[f64], rho: f64) -> Result<usize, String> {
    grid.iter().position(|&r| r == rho).ok_or(format!("rho={rho} missing from grid"))
}

fn kse_valley() -> Outcome {
    let (plan, result) = kse_sweep()?;
    let lyap = plan.lyapunov_max().ok_or("KSE sweep has no Lyapunov exponent")?;
    let grid = plan.rho_grid();
    let lt: Vec<f64> = result.mean_valid_time(0.5).iter().map(|t| t * lyap).collect();
    let (lo, mid, hi) = (index_of(grid, 1e-3)?, index_of(grid, 0.1)?, index_of(grid, 2.0)?);
    let pass = lt[mid] > 2.0 && lt[mid] > lt[lo] && lt[mid] > lt[hi];
    let table: Vec<String> = grid.iter().zip(&lt).map(|(r, t)| format!("{r}:{t:.2}")).collect();
    Ok((
        pass,
        format!(
            "mean valid time [LT] {}; valley {}; {} failed runs",
            table.join(" "),
            valley_text(&result.valley),
            result.failures
        ),
    ))
}

fn valley_text(v: &esn_valley::metrics::ValleyReport) -> String {
    match (v.rho_lo, v.rho_hi) {
        (Some(a), Some(b)) => format!("[{a}, {b}]"),
        _ => "empty".into(),
    }
}

fn training_error_shape() -> Outcome {
    let (plan, result) = kse_sweep()?;
    let seeds = derive_seeds(plan.spec.sweep.master_seed, 0, 0);
    let grid = plan.rho_grid().to_vec();
    let mut e = Vec::with_capacity(grid.len());
    for &rho in &grid {
        let (model, _) = plan.train_model(rho, &seeds).map_err(err)?;
        e.push(plan.training_error(&model).map_err(err)?);
    }
    let best = (0..e.len()).min_by(|&a, &b| e[a].total_cmp(&e[b])).unwrap();
    let interior = best > 0 && best + 1 < e.len();
    let rises = e.windows(2).any(|w| w[1] > w[0]);
    let falls = e.windows(2).any(|w| w[1] < w[0]);
    let inside = result.valley.contains(grid[best]);
    let table: Vec<String> = grid.iter().zip(&e).map(|(r, v)| format!("{r}:{v:.2e}")).collect();
    Ok((
        interior && rises && falls && inside,
        format!(
            "E(rho) {}; minimum at rho={} (interior: {interior}); valley {}",
            table.join(" "),
            grid[best],
            valley_text(&result.valley)
        ),
    ))
}

// ---------------------------------------------------------------- 6

fn ab_full_scale() -> Outcome {
    let spec = SweepSpec::from_toml_with_overrides(
        &std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/ab_full.toml")).map_err(err)?,
        &["sweep.rho_grid=[1.4]".into(), "sweep.start_mode=\"warm\"".into()],
    )
    .map_err(err)?;
    if spec.sweep.horizon < 1600 {
        return Err(format!("horizon {} < 1600", spec.sweep.horizon));
    }
    let plan = SweepPlan::new(spec).map_err(err)?;
    let result = plan.run(None).map_err(err)?;
    let good = result
        .records
        .iter()
        .filter(|r| r.trace.as_ref().is_some_and(|t| t.rmse.len() >= 1600 && t.rmse.iter().all(|&v| v < 0.1)))
        .count();
    let total = result.records.len();
    Ok((good >= 90 && total == 100, format!("{good}/{total} realizations keep RMSE < 0.1 for 1600 steps")))
}

// ---------------------------------------------------------------- 7

fn topology_effect() -> Outcome {
    let directed = config("ab_desk.toml");
    let mut undirected = directed.clone();
    undirected.topology.kind = esn_valley::topology::TopologyKind::UndirectedRandom;
    let mut widths = Vec::new();
    for spec in [directed, undirected] {
        let r = SweepPlan::new(spec).map_err(err)?.run(None).map_err(err)?;
        widths.push((r.valley.width(), r.valley.points(), valley_text(&r.valley)));
    }
    Ok((
        widths[1].0 >= widths[0].0,
        format!(
            "directed valley {} (width {:.2}), undirected valley {} (width {:.2})",
            widths[0].2, widths[0].0, widths[1].2, widths[1].0
        ),
    ))
}

// ---------------------------------------------------------------- 9

fn determinism() -> Outcome {
    let spec = SweepSpec::from_toml_with_overrides(
        &std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/kse_desk.toml")).map_err(err)?,
        &[
            "esn.n=256".into(),
            "sweep.rho_grid=[0.05, 0.5]".into(),
            "sweep.ensemble_size=3".into(),
            "sweep.train_steps=3000".into(),
            "sweep.horizon=200".into(),
            "sweep.valley_horizon=100".into(),
        ],
    )
    .map_err(err)?;
    let plan = SweepPlan::new(spec.clone()).map_err(err)?;
    let serial = plan.run(Some(1)).map_err(err)?;
    let parallel = plan.run(None).map_err(err)?;
    let fresh = SweepPlan::new(spec).map_err(err)?;
    let mut same = serial.records.len() == parallel.records.len();
    for (a, b) in serial.records.iter().zip(&parallel.records) {
        same &= a.same_result(b);
        same &= fresh.run_single(a.rho_index, a.realization_index).same_result(a);
    }
    let csv = |r: &SweepResult| {
        let mut v = Vec::new();
        r.surface.write_csv(&mut v).map(|_| v)
    };
    let identical = csv(&serial).map_err(err)? == csv(&parallel).map_err(err)?;
    Ok((
        same && identical,
        format!(
            "{} records regenerated bit-identically: {same}; serial/parallel surface.csv identical: {identical}",
            serial.records.len()
        ),
    ))
}

// ---------------------------------------------------------------- 10

fn collision_variability() -> Outcome {
    let spec = config("collision_full.toml");
    let threshold = spec.sweep.threshold;
    let plan = SweepPlan::new(spec).map_err(err)?;
    let result = plan.run(None).map_err(err)?;
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, &rho) in plan.rho_grid().iter().enumerate() {
        let runs: Vec<_> = result.records.iter().filter(|r| r.rho_index == i).collect();
        let good = runs
            .iter()
            .filter(|r| r.trace.as_ref().is_some_and(|t| t.diverged_at.is_none() && t.rmse.iter().all(|&v| v < threshold)))
            .count();
        let frac = good as f64 / runs.len() as f64;
        pass &= (0.3..=0.7).contains(&frac);
        parts.push(format!("rho={rho}: {good}/{} successful ({frac:.2})", runs.len()));
    }
    Ok((pass, parts.join("; ")))
}

// ----------------------------------------------------------------

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let env_on = |k: &str| std::env::var(k).is_ok_and(|v| !v.is_empty() && v != "0");
    let full = args.iter().any(|a| a == "--paper-scale") || env_on("ESN_VALLEY_PAPER_SCALE");
    let only: Option<Vec<usize>> = args
        .iter()
        .position(|a| a == "--only")
        .and_then(|i| args.get(i + 1).cloned())
        .or_else(|| std::env::var("ESN_VALLEY_CRITERIA").ok())
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());

    type Criterion = (usize, &'static str, bool, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, "spectral scaling", false, spectral_scaling),
        (2, "ridge correctness", false, ridge_correctness),
        (3, "NLSE generator validity", false, nlse_validity),
        (4, "ETDRK4 quality", false, etdrk4_quality),
        (5, "desk-scale KSE valley", false, kse_valley),
        (6, "full-scale AB spot check", true, ab_full_scale),
        (7, "topology effect", false, topology_effect),
        (8, "training-error shape", false, training_error_shape),
        (9, "determinism", false, determinism),
        (10, "collision-state variability", true, collision_variability),
    ];
    let mut failed = 0;
    for (n, name, full_scale, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        if full_scale && !full {
            println!("criterion {n:>2} {name}: SKIPPED (full scale; pass --paper-scale or set ESN_VALLEY_PAPER_SCALE=1)");
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok((true, detail)) => println!("criterion {n:>2} {name}: PASS ({secs:.1} s) {detail}"),
            Ok((false, detail)) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({secs:.1} s) {detail}");
            }
            Err(e) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({secs:.1} s) error: {e}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
