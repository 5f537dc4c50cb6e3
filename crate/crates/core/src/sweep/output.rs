//! Results directory writer.
//!
//! ```text
//! <dir>/surface.csv          ErrorSurface CSV
//! <dir>/valley.txt           ValleyReport key=value lines
//! <dir>/surface.pgm          heatmap of the mean error
//! <dir>/runs/<rho>/<j>.csv   per-realization error traces
//! <dir>/manifest.txt         resolved spec (valid TOML) plus run summary
//! <dir>/timing.csv           wall time per run
//! ```
//!
//! Everything except `timing.csv` is a deterministic function of the spec.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::sweep::run::{RunRecord, SweepResult};
use crate::sweep::spec::SweepSpec;

/// Directory name for a ρ value under `runs/`.
pub fn rho_dir_name(rho: f64) -> String {
    format!("{rho}")
}

pub fn write_results(dir: &Path, spec: &SweepSpec, result: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    result.surface.save(&dir.join("surface.csv"))?;
    fs::write(dir.join("valley.txt"), result.valley.to_text())?;
    {
        let mut w = BufWriter::new(fs::File::create(dir.join("surface.pgm"))?);
        result.surface.write_pgm(&mut w, spec.sweep.heatmap_cutoff)?;
        w.flush()?;
    }
    let runs = dir.join("runs");
    for r in &result.records {
        let d = runs.join(rho_dir_name(r.rho));
        fs::create_dir_all(&d)?;
        let mut w = BufWriter::new(fs::File::create(d.join(format!("{}.csv", r.realization_index)))?);
        write_run(&mut w, r)?;
        w.flush()?;
    }
    let mut timing = BufWriter::new(fs::File::create(dir.join("timing.csv"))?);
    writeln!(timing, "rho,realization,wall_time_s")?;
    let mut total = 0.0;
    for r in &result.records {
        writeln!(timing, "{},{},{:.6}", r.rho, r.realization_index, r.wall_time)?;
        total += r.wall_time;
    }
    writeln!(timing, "# total_wall_time_s={total:.6}")?;
    timing.flush()?;
    fs::write(dir.join("manifest.txt"), manifest(spec, result))?;
    Ok(())
}

fn write_run<W: Write>(w: &mut W, r: &RunRecord) -> Result<()> {
    writeln!(w, "# rho={:.17e}", r.rho)?;
    writeln!(w, "# realization={}", r.realization_index)?;
    writeln!(
        w,
        "# seeds=topology:{},weights:{},input:{},init:{}",
        r.seeds.topology, r.seeds.weights, r.seeds.input, r.seeds.init
    )?;
    match r.training_error {
        Some(e) => writeln!(w, "# training_error={e:.17e}")?,
        None => writeln!(w, "# training_error=none")?,
    }
    match r.trace.as_ref().and_then(|t| t.diverged_at) {
        Some(d) => writeln!(w, "# diverged_at={d}")?,
        None => writeln!(w, "# diverged_at=none")?,
    }
    if let Some(f) = &r.failure {
        writeln!(w, "# failure={}", f.replace('\n', " "))?;
    }
    if let Some(wu) = &r.warmup_rmse {
        let mean = if wu.is_empty() { 0.0 } else { wu.iter().sum::<f64>() / wu.len() as f64 };
        writeln!(w, "# warmup_mean_rmse={mean:.17e}")?;
    }
    writeln!(w, "step,time,lyapunov_time,rmse")?;
    if let Some(t) = &r.trace {
        for (h, e) in t.rmse.iter().enumerate() {
            let time = t.time(h);
            let lt = t.lyapunov_max.map_or(f64::NAN, |l| l * time);
            writeln!(w, "{h},{time:.17e},{lt:.17e},{e:.17e}")?;
        }
    }
    Ok(())
}

/// Manifest text. Summary lines are TOML comments, so the file can be fed
/// back as a sweep configuration.
pub fn manifest(spec: &SweepSpec, result: &SweepResult) -> String {
    let mut s = String::new();
    s.push_str(&format!("# esn-valley {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("# runs={}\n", result.records.len()));
    s.push_str(&format!("# failures={}\n", result.failures));
    for r in result.records.iter().filter(|r| !r.succeeded()) {
        s.push_str(&format!(
            "# failed rho={} realization={}: {}\n",
            r.rho,
            r.realization_index,
            r.failure.as_deref().unwrap_or("").replace('\n', " ")
        ));
    }
    let v = &result.valley;
    match (v.rho_lo, v.rho_hi) {
        (Some(a), Some(b)) => s.push_str(&format!("# valley=[{a}, {b}] best_rho={}\n", v.best_rho)),
        _ => s.push_str(&format!("# valley=empty best_rho={}\n", v.best_rho)),
    }
    s.push('\n');
    s.push_str(&spec.to_toml_string());
    s
}
