//! `esn-valley` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use esn_valley::checks;
use esn_valley::field::Encoding;
use esn_valley::metrics::{detect_valley, rmse_per_step, ErrorSurface, DEFAULT_HEATMAP_CUTOFF, DEFAULT_THRESHOLD};
use esn_valley::sweep::{derive_seeds, write_results, StartMode, SweepPlan, SweepSpec, SystemConfig};
use esn_valley::systems::{self, encode};
use esn_valley::{EsnModel, Error, FieldSeries, ReservoirState};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "esn-valley", version, about = "Reservoir-computing prediction of spatiotemporal fields and spectral-radius sweeps")]
struct Cli {
    /// Output directory (default: $ESN_VALLEY_OUT, else ./esn-valley-out).
    #[arg(long, global = true, env = "ESN_VALLEY_OUT")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Sweep configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set esn.n=512`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the truth series described by a configuration.
    Gen {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of samples (default: the sweep's training + warmup + horizon).
        #[arg(long)]
        steps: Option<usize>,
        /// Also write the raw complex field as `truth_re.csv` / `truth_im.csv`.
        #[arg(long)]
        raw: bool,
    },
    /// Train one reservoir realization on the leading part of a series.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Truth series CSV written by `gen`.
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        rho: f64,
        /// Realization index used for seed derivation.
        #[arg(long, default_value_t = 0)]
        realization: usize,
    },
    /// Predict with a trained model and score against the truth series.
    Predict {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Prediction steps (default: the configured horizon).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run a full ensemble sweep over the spectral-radius grid.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Maximum worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Detect the valley interval of an existing surface.csv.
    Valley {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Steps scored per ρ (default: all).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Render an existing surface.csv as a PGM heatmap.
    Heatmap {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long, default_value_t = DEFAULT_HEATMAP_CUTOFF)]
        cutoff: f64,
    },
    /// Run the built-in numerical self-checks.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("esn-valley-out"));
    match run(cli.command, &out_dir) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE })
        }
    }
}

fn run(command: Command, out: &Path) -> esn_valley::Result<u8> {
    match command {
        Command::Gen { cfg, steps, raw } => gen(&cfg, steps, raw, out),
        Command::Train {
            cfg,
            series,
            rho,
            realization,
        } => train(&cfg, &series, rho, realization, out),
        Command::Predict {
            cfg,
            series,
            model,
            horizon,
        } => predict(&cfg, &series, &model, horizon, out),
        Command::Sweep { cfg, workers } => sweep(&cfg, workers, out),
        Command::Valley {
            surface,
            threshold,
            horizon,
        } => valley(&surface, threshold, horizon, out),
        Command::Heatmap { surface, cutoff } => heatmap(&surface, cutoff, out),
        Command::Verify => Ok(verify()),
    }
}

fn load_spec(cfg: &ConfigArgs) -> esn_valley::Result<SweepSpec> {
    SweepSpec::load(&cfg.config, &cfg.overrides)
}

fn gen(cfg: &ConfigArgs, steps: Option<usize>, raw: bool, out: &Path) -> esn_valley::Result<u8> {
    let spec = load_spec(cfg)?;
    let steps = steps.unwrap_or_else(|| spec.truth_steps());
    let system = spec.system_config()?;
    let series = system.generate(steps, spec.encoding())?;
    std::fs::create_dir_all(out)?;
    let path = out.join("truth.csv");
    series.save(&path)?;
    if raw {
        let (re, im) = raw_parts(&system, steps)?;
        re.save(&out.join("truth_re.csv"))?;
        im.save(&out.join("truth_im.csv"))?;
    }
    println!(
        "wrote {}: {} channels, {} steps, dt={}, encoding={}",
        path.display(),
        series.channels(),
        series.len(),
        series.dt(),
        series.meta.encoding
    );
    Ok(0)
}

/// Real and imaginary parts of the raw field as two real series.
fn raw_parts(system: &SystemConfig, steps: usize) -> esn_valley::Result<(FieldSeries<f64>, FieldSeries<f64>)> {
    let field = match system {
        SystemConfig::Nlse(p) => systems::nlse::generate::<f64>(p, steps)?,
        SystemConfig::Cgle(p) => systems::solve_cgle::<f64>(p, steps)?,
        SystemConfig::Kse(p) => {
            let f = systems::solve_kse::<f64>(p, steps)?;
            let re = encode(&f, Encoding::RealScalar)?;
            let im = re.map(|_| 0.0)?;
            return Ok((re, im));
        }
    };
    let split = encode(&field, Encoding::RealImagSplit)?;
    let p = field.points();
    let part = |offset: usize, tag: &str| -> esn_valley::Result<FieldSeries<f64>> {
        let cols: Vec<Vec<f64>> = (0..split.len()).map(|t| split.column(t)[offset..offset + p].to_vec()).collect();
        let mut meta = split.meta.clone();
        meta.encoding = Encoding::RealScalar;
        meta.system_tag = format!("{}:{tag}", meta.system_tag);
        FieldSeries::from_columns(&cols, meta)
    };
    Ok((part(0, "re")?, part(p, "im")?))
}

fn train(cfg: &ConfigArgs, series: &Path, rho: f64, realization: usize, out: &Path) -> esn_valley::Result<u8> {
    let spec = load_spec(cfg)?;
    let truth = Arc::new(FieldSeries::load(series)?);
    let plan = SweepPlan::with_truth(spec.clone(), truth)?;
    let seeds = derive_seeds(spec.sweep.master_seed, 0, realization);
    let (model, _) = plan.train_model(rho, &seeds)?;
    let e = plan.training_error(&model)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("model.txt");
    model.save(&path)?;
    println!(
        "wrote {}: N={}, M={}, rho={}, training error E={e:.6e}",
        path.display(),
        model.hyper.n,
        model.hyper.input_dim,
        model.reservoir.spectral_radius
    );
    Ok(0)
}

fn predict(cfg: &ConfigArgs, series: &Path, model: &Path, horizon: Option<usize>, out: &Path) -> esn_valley::Result<u8> {
    let spec = load_spec(cfg)?;
    let truth = FieldSeries::<f64>::load(series)?;
    let model = EsnModel::<f64>::load(model)?;
    let horizon = horizon.unwrap_or(spec.sweep.horizon);
    let train = spec.sweep.train_steps;
    let lead = spec.lead_steps();
    if truth.len() < lead + horizon {
        return Err(Error::InvalidParameter(format!(
            "series has {} samples; prediction needs {}",
            truth.len(),
            lead + horizon
        )));
    }
    let zero = ReservoirState::zeros(model.hyper.n);
    let prediction = match spec.sweep.start_mode {
        StartMode::Warm => {
            let end = model.listen_each(&truth.slice(0..train)?, zero, |_, _| {})?;
            model.predict(None, end, horizon)?
        }
        StartMode::Cold => model.predict(Some(&truth.slice(train..lead)?), zero, horizon)?,
    };
    std::fs::create_dir_all(out)?;
    let pred = &prediction.series;
    pred.save(&out.join("prediction.csv"))?;
    let target = truth.slice(lead..lead + pred.len())?;
    target.save(&out.join("truth.csv"))?;
    let mut trace_text = String::from("step,time,rmse\n");
    if !pred.is_empty() {
        let cols: Vec<Vec<f64>> = (0..pred.len())
            .map(|t| target.column(t).iter().zip(pred.column(t)).map(|(a, b)| a - b).collect())
            .collect();
        let mut meta = target.meta.clone();
        meta.encoding = Encoding::RealScalar;
        meta.system_tag = format!("{}:difference", target.meta.system_tag);
        FieldSeries::from_columns(&cols, meta)?.save(&out.join("difference.csv"))?;
        let trace = rmse_per_step(&target, pred)?;
        for (h, e) in trace.rmse.iter().enumerate() {
            trace_text.push_str(&format!("{h},{:.17e},{e:.17e}\n", trace.time(h)));
        }
    }
    std::fs::write(out.join("trace.csv"), trace_text)?;
    if let Some(w) = &prediction.warmup_rmse {
        let mean = if w.is_empty() { 0.0 } else { w.iter().sum::<f64>() / w.len() as f64 };
        println!("cold-start warmup: {} steps, mean one-step RMSE {mean:.6e}", w.len());
    }
    match prediction.diverged_at {
        Some(d) => println!("prediction diverged at step {d}"),
        None => println!("predicted {} steps into {}", pred.len(), out.display()),
    }
    Ok(0)
}

fn sweep(cfg: &ConfigArgs, workers: Option<usize>, out: &Path) -> esn_valley::Result<u8> {
    let spec = load_spec(cfg)?;
    let plan = SweepPlan::new(spec.clone())?;
    let result = plan.run(workers)?;
    write_results(out, &spec, &result)?;
    let v = &result.valley;
    match (v.rho_lo, v.rho_hi) {
        (Some(a), Some(b)) => println!("valley: rho in [{a}, {b}], best rho {}", v.best_rho),
        _ => println!("no rho meets threshold {}; best rho {}", v.threshold, v.best_rho),
    }
    println!(
        "{} runs, {} failed; results in {}",
        result.records.len(),
        result.failures,
        out.display()
    );
    Ok(0)
}

fn valley(surface: &Path, threshold: f64, horizon: Option<usize>, out: &Path) -> esn_valley::Result<u8> {
    let s = ErrorSurface::load(surface)?;
    let report = detect_valley(&s, threshold, horizon.unwrap_or(s.steps()))?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("valley.txt"), report.to_text())?;
    print!("{}", report.to_text());
    Ok(0)
}

fn heatmap(surface: &Path, cutoff: f64, out: &Path) -> esn_valley::Result<u8> {
    let s = ErrorSurface::load(surface)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("surface.pgm");
    let mut buf = Vec::new();
    s.write_pgm(&mut buf, cutoff)?;
    std::fs::write(&path, buf)?;
    println!("wrote {} ({} x {})", path.display(), s.steps(), s.rho_grid.len());
    Ok(0)
}

fn verify() -> u8 {
    let mut failed = 0;
    for c in checks::run_all() {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        0
    } else {
        println!("{failed} check(s) failed");
        EXIT_VERIFY
    }
}
