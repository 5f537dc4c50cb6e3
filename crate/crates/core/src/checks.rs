//! Fast self-checks behind the `verify` command. Each check compares a
//! production code path against an independent computation.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::esn::train_readout;
use crate::linalg::{dense_spectral_radius, DenseMatrix};
use crate::systems::nlse::{self, collision_value, max_residual};
use crate::systems::{solve_cgle, solve_kse, CglParams, CglSolver, KseParams, KseSolver, NlseParams};
use crate::sweep::{SweepPlan, SweepSpec};
use crate::topology::{assign_weights, generate_topology, scale_to_spectral_radius, TopologySpec};

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckOutcome { name, passed, detail }
    }

    fn from_result(name: &'static str, r: crate::Result<(bool, String)>) -> Self {
        match r {
            Ok((p, d)) => Self::new(name, p, d),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

/// Runs every check in order.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        spectral_scaling(),
        ridge_against_conjugate_gradient(),
        ridge_singularity_reported(),
        nlse_residuals(),
        etdrk4_convergence(),
        cgle_plane_wave(),
        sweep_determinism(),
    ]
}

/// Scaled random directed matrices against the dense eigensolver.
pub fn spectral_scaling() -> CheckOutcome {
    let r = (|| {
        let mut worst = 0.0f64;
        for seed in 0..10u64 {
            let edges = generate_topology(&TopologySpec::directed(200, 3.0, seed))?;
            let w = assign_weights::<f64>(&edges, seed + 1000);
            for target in [0.1, 0.7, 1.4, 2.0] {
                let net = scale_to_spectral_radius(&w, target)?;
                let rho = dense_spectral_radius(&net.weights);
                worst = worst.max((rho - target).abs() / target);
            }
        }
        Ok((worst < 1e-6, format!("max relative error {worst:.2e} over 40 matrices")))
    })();
    CheckOutcome::from_result("spectral scaling", r)
}

/// Minimises the ridge loss `‖W R − V‖² + Γ‖W‖²` by conjugate gradients on
/// each output row, using only products with `R` and `Rᵀ`.
pub fn ridge_by_conjugate_gradient(states: &DenseMatrix<f64>, targets: &DenseMatrix<f64>, ridge: f64) -> DenseMatrix<f64> {
    let (n, t) = states.shape();
    let l = targets.rows();
    let apply = |x: &[f64]| -> Vec<f64> {
        // (R Rᵀ + Γ) x computed as R (Rᵀ x) + Γ x
        let mut y = vec![0.0; t];
        for (i, &xi) in x.iter().enumerate().take(n) {
            for (yk, rk) in y.iter_mut().zip(states.row(i)) {
                *yk += rk * xi;
            }
        }
        (0..n)
            .map(|i| states.row(i).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() + ridge * x[i])
            .collect()
    };
    let mut w = DenseMatrix::zeros(l, n);
    for o in 0..l {
        let v = targets.row(o);
        let b: Vec<f64> = (0..n).map(|i| states.row(i).iter().zip(v).map(|(a, c)| a * c).sum()).collect();
        let bn = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|x| x * x).sum();
        for _ in 0..10 * n {
            if rr.sqrt() <= 1e-15 * bn {
                break;
            }
            let ap = apply(&p);
            let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|x| x * x).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        w.row_mut(o).copy_from_slice(&x);
    }
    w
}

pub fn ridge_against_conjugate_gradient() -> CheckOutcome {
    let r = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let states = DenseMatrix::from_fn(20, 200, |_, _| rng.gen_range(-1.0..1.0));
            let targets = DenseMatrix::from_fn(3, 200, |_, _| rng.gen_range(-1.0..1.0));
            let w = train_readout(&states, &targets, 1e-4, 0)?;
            let cg = ridge_by_conjugate_gradient(&states, &targets, 1e-4);
            let rel = w.max_abs_diff(&cg).unwrap_or(f64::INFINITY) / cg.max_abs();
            worst = worst.max(rel);
        }
        Ok((worst < 1e-6, format!("max relative deviation {worst:.2e}")))
    })();
    CheckOutcome::from_result("ridge readout vs CG minimiser", r)
}

pub fn ridge_singularity_reported() -> CheckOutcome {
    // Two identical neurons make R'R'ᵀ singular.
    let states = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]);
    let targets = DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0]]);
    match train_readout(&states, &targets, 0.0, 0) {
        Err(Error::Singular { .. }) => CheckOutcome::new("ridge singularity at zero regularisation", true, "reported".into()),
        other => CheckOutcome::new(
            "ridge singularity at zero regularisation",
            false,
            format!("expected a singularity error, got {other:?}"),
        ),
    }
}

pub fn nlse_residuals() -> CheckOutcome {
    let r = (|| {
        let mut parts = Vec::new();
        let mut worst = 0.0f64;
        for p in [NlseParams::akhmediev(), NlseParams::kuznetsov_ma()] {
            let sel = nlse::select_breather_variant(&p)?;
            worst = worst.max(sel.residual);
            parts.push(format!("a={} {} {:.1e}", p.a, sel.variant.label(), sel.residual));
        }
        for (a1, a2) in [(0.14, 0.34), (0.42, 0.18)] {
            let p = NlseParams::collision(a1, a2);
            let res = max_residual(&p, 80, &|x, t| collision_value(a1, a2, x, t))?;
            worst = worst.max(res);
            parts.push(format!("collision({a1},{a2}) {res:.1e}"));
        }
        Ok((worst < 1e-4, parts.join("; ")))
    })();
    CheckOutcome::from_result("NLSE residual", r)
}

pub fn etdrk4_convergence() -> CheckOutcome {
    let r = (|| {
        let kp = KseParams {
            transient: 100.0,
            ..KseParams::default()
        };
        let u0 = solve_kse::<f64>(&kp, 1)?.samples.remove(0);
        let kse = |substeps: usize| -> crate::Result<Vec<f64>> {
            let mut s = KseSolver::<f64>::from_state(KseParams { substeps, ..kp.clone() }, &u0)?;
            s.advance_time(10.0)?;
            Ok(s.state())
        };
        let (a, b, c) = (kse(10)?, kse(20)?, kse(40)?);
        let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let kse_order = (d(&a, &b) / d(&b, &c)).log2();

        let cp = CglParams {
            integrate_dt: 1e-3,
            sample_dt: 1e-3,
            transient: 20.0,
            ..CglParams::default()
        };
        let v0 = solve_cgle::<f64>(&cp, 1)?.samples.remove(0);
        let cgle = |h: f64| -> crate::Result<Vec<Complex<f64>>> {
            let mut s = CglSolver::<f64>::from_state(
                CglParams {
                    integrate_dt: h,
                    sample_dt: h,
                    ..cp.clone()
                },
                &v0,
            )?;
            s.advance_time(1.0)?;
            Ok(s.state())
        };
        let (a, b, c) = (cgle(0.02)?, cgle(0.01)?, cgle(0.005)?);
        let dc = |x: &[Complex<f64>], y: &[Complex<f64>]| x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        let cgle_order = (dc(&a, &b) / dc(&b, &c)).log2();
        Ok((
            kse_order >= 3.5 && cgle_order >= 3.5,
            format!("KSE order {kse_order:.2}, CGLE order {cgle_order:.2}"),
        ))
    })();
    CheckOutcome::from_result("ETDRK4 self-convergence", r)
}

pub fn cgle_plane_wave() -> CheckOutcome {
    let r = (|| {
        let p = CglParams {
            sample_dt: 1e-4,
            ..CglParams::default()
        };
        let mut s = CglSolver::<f64>::from_state(p.clone(), &vec![Complex::new(1.0, 0.0); p.x_points])?;
        s.advance_time(1.0)?;
        let exact = Complex::from_polar(1.0, -p.beta_disp);
        let err = s.state().iter().map(|z| (z - exact).norm()).fold(0.0, f64::max);
        Ok((err < 1e-6, format!("max error at t=1: {err:.2e}")))
    })();
    CheckOutcome::from_result("CGLE plane wave", r)
}

pub fn sweep_determinism() -> CheckOutcome {
    const SPEC: &str = r#"
[system]
kind = "akhmediev"
[esn]
n = 128
[sweep]
rho_grid = [0.5, 1.2]
ensemble_size = 2
train_steps = 300
horizon = 40
"#;
    let r = (|| {
        let spec = SweepSpec::from_toml_str(SPEC)?;
        let plan = SweepPlan::new(spec)?;
        let serial = plan.run(Some(1))?;
        let parallel = plan.run(Some(2))?;
        let again = plan.run_single(1, 1);
        let same_records = serial.records.iter().zip(&parallel.records).all(|(a, b)| a.same_result(b))
            && again.same_result(&serial.records[3]);
        let mut a = Vec::new();
        let mut b = Vec::new();
        serial.surface.write_csv(&mut a)?;
        parallel.surface.write_csv(&mut b)?;
        Ok((same_records && a == b, format!("records identical: {same_records}, surface identical: {}", a == b)))
    })();
    CheckOutcome::from_result("sweep determinism", r)
}
