//! Prediction-error traces, ensemble statistics, training error, valley
//! detection and surface export.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::esn::{EsnModel, ReservoirState};
use crate::field::{Encoding, FieldSeries};
use crate::linalg::DenseMatrix;
use crate::Real;

/// Error threshold used for valid-prediction times and default valleys.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Default gray-scale cutoff of the heatmap export.
pub const DEFAULT_HEATMAP_CUTOFF: f64 = 3.0;
/// Multiple of the truth RMS substituted for diverged entries.
pub const SENTINEL_FACTOR: f64 = 10.0;

/// Per-step RMSE of one prediction.
///
/// Entry `h` compares the `h`-th predicted sample, which lies `(h + 1)·dt`
/// after the last sample the reservoir consumed.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTrace {
    pub rmse: Vec<f64>,
    pub dt: f64,
    pub lyapunov_max: Option<f64>,
    pub diverged_at: Option<usize>,
}

impl ErrorTrace {
    pub fn len(&self) -> usize {
        self.rmse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rmse.is_empty()
    }

    /// Time ahead of the last consumed sample for step `h`.
    pub fn time(&self, h: usize) -> f64 {
        (h + 1) as f64 * self.dt
    }

    /// Number of leading steps with RMSE strictly below `threshold`.
    /// A diverged trace cannot count beyond its last finite entry.
    pub fn valid_steps(&self, threshold: f64) -> usize {
        self.rmse
            .iter()
            .position(|&e| !(e < threshold))
            .unwrap_or(self.rmse.len())
    }

    /// [`ErrorTrace::valid_steps`] as a time.
    pub fn valid_time(&self, threshold: f64) -> f64 {
        self.valid_steps(threshold) as f64 * self.dt
    }

    /// Valid-prediction time in Lyapunov times, if `lyapunov_max` is set.
    pub fn valid_lyapunov_times(&self, threshold: f64) -> Option<f64> {
        self.lyapunov_max.map(|l| self.valid_time(threshold) * l)
    }
}

/// `rmse[t] = sqrt((1/M) Σ_i (truth[i][t] − pred[i][t])²)` over the length of
/// `pred`, which must not exceed that of `truth`.
///
/// A magnitude-encoded truth may be compared with a prediction tagged
/// `RealScalar` (closed-loop outputs of a magnitude model are not clamped to
/// be nonnegative); any other encoding difference is rejected.
pub fn rmse_per_step<T: Real>(truth: &FieldSeries<T>, pred: &FieldSeries<T>) -> Result<ErrorTrace> {
    if truth.channels() != pred.channels() {
        return Err(Error::DimensionMismatch {
            context: "rmse_per_step (channels)",
            expected: truth.channels(),
            actual: pred.channels(),
        });
    }
    if pred.len() > truth.len() {
        return Err(Error::DimensionMismatch {
            context: "rmse_per_step (steps)",
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let (dt_a, dt_b) = (truth.dt(), pred.dt());
    if (dt_a - dt_b).abs() > 1e-12 * dt_a.abs().max(dt_b.abs()) {
        return Err(Error::invalid(format!("rmse_per_step: dt {dt_a} vs {dt_b}")));
    }
    let compatible = truth.meta.encoding == pred.meta.encoding
        || matches!(
            (truth.meta.encoding, pred.meta.encoding),
            (Encoding::Magnitude, Encoding::RealScalar) | (Encoding::RealScalar, Encoding::Magnitude)
        );
    if !compatible {
        return Err(Error::invalid(format!(
            "rmse_per_step: encodings {} and {} differ",
            truth.meta.encoding, pred.meta.encoding
        )));
    }
    let m = truth.channels();
    let mut rmse = vec![0.0; pred.len()];
    for i in 0..m {
        let (a, b) = (truth.channel(i), pred.channel(i));
        for (t, e) in rmse.iter_mut().enumerate() {
            let d = (a[t] - b[t]).to_f64_lossy();
            *e += d * d;
        }
    }
    for e in &mut rmse {
        *e = (*e / m as f64).sqrt();
    }
    Ok(ErrorTrace {
        rmse,
        dt: truth.dt(),
        lyapunov_max: None,
        diverged_at: None,
    })
}

/// Pointwise ensemble mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Ensemble statistics over `traces`, out to the longest trace.
///
/// With `sentinel = Some(c)`, entries that are missing (a shorter, diverged
/// trace) or non-finite count as `c`, and finite entries above `c` are capped
/// at `c`. Without a sentinel all traces must have equal length.
pub fn ensemble_stats(traces: &[ErrorTrace], sentinel: Option<f64>) -> Result<EnsembleStats> {
    let len = traces.iter().map(|t| t.len()).max().ok_or(Error::EmptySeries)?;
    if sentinel.is_none() && traces.iter().any(|t| t.len() != len) {
        return Err(Error::invalid("traces of unequal length need a sentinel"));
    }
    let count = traces.len() as f64;
    let value = |tr: &ErrorTrace, h: usize| -> f64 {
        match (tr.rmse.get(h), sentinel) {
            (Some(&e), Some(c)) if e.is_finite() => e.min(c),
            (_, Some(c)) => c,
            (Some(&e), None) => e,
            (None, None) => unreachable!(),
        }
    };
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for h in 0..len {
        let mu = traces.iter().map(|t| value(t, h)).sum::<f64>() / count;
        let var = traces.iter().map(|t| (value(t, h) - mu).powi(2)).sum::<f64>() / count;
        mean[h] = mu;
        std[h] = var.sqrt();
    }
    Ok(EnsembleStats { mean, std })
}

/// Divergence sentinel for a truth series: `10 × RMS(truth)`.
pub fn divergence_sentinel<T: Real>(truth: &FieldSeries<T>) -> f64 {
    SENTINEL_FACTOR * truth.rms().to_f64_lossy()
}

/// Time average of the per-step RMS of `W_RO·r'(t) − v(t)` for precomputed
/// normalised states (`N × T`) and targets (`L × T`).
pub fn training_error_from_states<T: Real>(readout: &DenseMatrix<T>, states: &DenseMatrix<T>, targets: &DenseMatrix<T>) -> Result<f64> {
    if states.cols() != targets.cols() || readout.cols() != states.rows() || readout.rows() != targets.rows() {
        return Err(Error::invalid(format!(
            "training_error: readout {:?}, states {:?}, targets {:?}",
            readout.shape(),
            states.shape(),
            targets.shape()
        )));
    }
    if states.cols() == 0 {
        return Err(Error::EmptySeries);
    }
    let out = readout.matmul(states)?;
    let l = targets.rows();
    let mut total = 0.0;
    for t in 0..states.cols() {
        let mut se = 0.0;
        for k in 0..l {
            let d = (out[(k, t)] - targets[(k, t)]).to_f64_lossy();
            se += d * d;
        }
        total += (se / l as f64).sqrt();
    }
    Ok(total / states.cols() as f64)
}

/// Training error `E` of a trained model on its training series, re-driving
/// the reservoir from `initial` and skipping the transient, with the same
/// one-step-ahead pairing the readout was fitted with.
pub fn training_error<T: Real>(model: &EsnModel<T>, series: &FieldSeries<T>, initial: ReservoirState<T>) -> Result<f64> {
    let w = model.readout.as_ref().ok_or(Error::Untrained)?;
    let s = model.hyper.transient_steps;
    if series.len() < s + 2 {
        return Err(Error::invalid("training series has no targets after the transient"));
    }
    let l = w.rows();
    let mut total = 0.0;
    let mut count = 0usize;
    let last = series.len() - 1;
    model.listen_each(series, initial, |t, rn| {
        if t >= s && t < last {
            let mut se = 0.0;
            for k in 0..l {
                let o: T = w.row(k).iter().zip(rn).map(|(a, b)| *a * *b).sum();
                let d = (o - series.get(k, t + 1)).to_f64_lossy();
                se += d * d;
            }
            total += (se / l as f64).sqrt();
            count += 1;
        }
    })?;
    Ok(total / count as f64)
}

/// Ensemble-mean and standard-deviation error over a `(ρ, step)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSurface {
    pub rho_grid: Vec<f64>,
    /// `|ρ| × steps`
    pub mean: DenseMatrix<f64>,
    pub std: DenseMatrix<f64>,
    /// Realizations per ρ that entered the statistics.
    pub ensemble_size: Vec<usize>,
    pub dt: f64,
    pub lyapunov_max: Option<f64>,
}

impl ErrorSurface {
    /// Assembles a surface from per-ρ statistics; all rows must have the
    /// same length.
    pub fn from_rows(
        rho_grid: Vec<f64>,
        rows: &[EnsembleStats],
        ensemble_size: Vec<usize>,
        dt: f64,
        lyapunov_max: Option<f64>,
    ) -> Result<Self> {
        if rows.len() != rho_grid.len() || ensemble_size.len() != rho_grid.len() {
            return Err(Error::invalid("surface rows do not match the rho grid"));
        }
        if rho_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("rho grid must be strictly ascending"));
        }
        let steps = rows.first().map_or(0, |r| r.mean.len());
        if rows.iter().any(|r| r.mean.len() != steps || r.std.len() != steps) {
            return Err(Error::invalid("surface rows have unequal lengths"));
        }
        let mut mean = DenseMatrix::zeros(rho_grid.len(), steps);
        let mut std = DenseMatrix::zeros(rho_grid.len(), steps);
        for (i, r) in rows.iter().enumerate() {
            mean.row_mut(i).copy_from_slice(&r.mean);
            std.row_mut(i).copy_from_slice(&r.std);
        }
        Ok(ErrorSurface {
            rho_grid,
            mean,
            std,
            ensemble_size,
            dt,
            lyapunov_max,
        })
    }

    pub fn steps(&self) -> usize {
        self.mean.cols()
    }

    /// Writes `rho,step,time,lyapunov_time,mean_rmse,std_rmse`, one row per
    /// `(ρ, step)`, preceded by `#` comment lines with `dt`, `lyapunov_max`
    /// and the per-ρ ensemble sizes. `lyapunov_time` is `nan` when no
    /// exponent is configured.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# dt={:.17e}", self.dt)?;
        match self.lyapunov_max {
            Some(l) => writeln!(w, "# lyapunov_max={l:.17e}")?,
            None => writeln!(w, "# lyapunov_max=none")?,
        }
        let sizes: Vec<String> = self.ensemble_size.iter().map(|s| s.to_string()).collect();
        writeln!(w, "# ensemble_size={}", sizes.join(","))?;
        writeln!(w, "rho,step,time,lyapunov_time,mean_rmse,std_rmse")?;
        for (i, rho) in self.rho_grid.iter().enumerate() {
            for h in 0..self.steps() {
                let time = (h + 1) as f64 * self.dt;
                let lt = self.lyapunov_max.map_or(f64::NAN, |l| l * time);
                writeln!(
                    w,
                    "{rho:.17e},{h},{time:.17e},{lt:.17e},{:.17e},{:.17e}",
                    self.mean[(i, h)],
                    self.std[(i, h)]
                )?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, path: Option<&Path>) -> Result<Self> {
        let mut dt = None;
        let mut lyapunov_max = None;
        let mut sizes: Vec<usize> = Vec::new();
        let mut rho_grid: Vec<f64> = Vec::new();
        let mut mean_rows: Vec<Vec<f64>> = Vec::new();
        let mut std_rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = ln + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    match k.trim() {
                        "dt" => dt = Some(parse_f64(v, path, lineno)?),
                        "lyapunov_max" => {
                            lyapunov_max = if v.trim() == "none" { None } else { Some(parse_f64(v, path, lineno)?) }
                        }
                        "ensemble_size" => {
                            sizes = v
                                .split(',')
                                .filter(|s| !s.trim().is_empty())
                                .map(|s| s.trim().parse().map_err(|_| Error::parse(path, lineno, "bad ensemble size")))
                                .collect::<Result<_>>()?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("rho,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::parse(path, lineno, "expected 6 columns"));
            }
            let rho = parse_f64(f[0], path, lineno)?;
            let step: usize = f[1].trim().parse().map_err(|_| Error::parse(path, lineno, "bad step"))?;
            if rho_grid.last() != Some(&rho) {
                rho_grid.push(rho);
                mean_rows.push(Vec::new());
                std_rows.push(Vec::new());
            }
            let row = mean_rows.len() - 1;
            if step != mean_rows[row].len() {
                return Err(Error::parse(path, lineno, "steps must be consecutive from 0"));
            }
            mean_rows[row].push(parse_f64(f[4], path, lineno)?);
            std_rows[row].push(parse_f64(f[5], path, lineno)?);
        }
        let dt = dt.ok_or_else(|| Error::parse(path, 0, "missing '# dt=' header"))?;
        if sizes.len() != rho_grid.len() {
            return Err(Error::parse(path, 0, "ensemble_size header does not match rho rows"));
        }
        let rows: Vec<EnsembleStats> = mean_rows
            .into_iter()
            .zip(std_rows)
            .map(|(mean, std)| EnsembleStats { mean, std })
            .collect();
        Self::from_rows(rho_grid, &rows, sizes, dt, lyapunov_max)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f), Some(path))
    }

    /// 8-bit binary PGM (`P5`): one row per ρ with the largest ρ on top,
    /// one column per step. Gray level is `round(255 · min(v, cutoff) / cutoff)`
    /// for the mean RMSE `v`, so black is zero error and white is at or above
    /// the cutoff; non-finite values are white.
    pub fn write_pgm<W: Write>(&self, mut w: W, cutoff: f64) -> Result<()> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::invalid("heatmap cutoff must be positive"));
        }
        let (rows, cols) = self.mean.shape();
        write!(w, "P5\n{cols} {rows}\n255\n")?;
        let mut buf = Vec::with_capacity(rows * cols);
        for i in (0..rows).rev() {
            for &v in self.mean.row(i) {
                buf.push(gray_level(v, cutoff));
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }
}

/// Gray level of the heatmap mapping.
pub fn gray_level(v: f64, cutoff: f64) -> u8 {
    if !v.is_finite() {
        return 255;
    }
    (255.0 * v.clamp(0.0, cutoff) / cutoff).round() as u8
}

fn parse_f64(s: &str, path: Option<&Path>, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("bad number '{}'", s.trim())))
}

/// Interval of ρ around the best score.
#[derive(Clone, Debug, PartialEq)]
pub struct ValleyReport {
    /// `None` when no ρ meets the threshold.
    pub rho_lo: Option<f64>,
    pub rho_hi: Option<f64>,
    pub threshold: f64,
    pub horizon_steps: usize,
    pub best_rho: f64,
    pub best_score: f64,
    pub rho_grid: Vec<f64>,
    pub scores: Vec<f64>,
}

impl ValleyReport {
    pub fn is_empty(&self) -> bool {
        self.rho_lo.is_none()
    }

    /// `rho_hi − rho_lo`, zero for an empty valley.
    pub fn width(&self) -> f64 {
        match (self.rho_lo, self.rho_hi) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Number of grid points inside the interval.
    pub fn points(&self) -> usize {
        match (self.rho_lo, self.rho_hi) {
            (Some(a), Some(b)) => self.rho_grid.iter().filter(|&&r| r >= a && r <= b).count(),
            _ => 0,
        }
    }

    pub fn contains(&self, rho: f64) -> bool {
        matches!((self.rho_lo, self.rho_hi), (Some(a), Some(b)) if rho >= a && rho <= b)
    }

    /// Flat `key=value` lines.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.17e}"));
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(",");
        format!(
            "rho_lo={}\nrho_hi={}\nwidth={:.17e}\nthreshold={:.17e}\nhorizon_steps={}\nbest_rho={:.17e}\nbest_score={:.17e}\nrho_grid={}\nscores={}\n",
            opt(self.rho_lo),
            opt(self.rho_hi),
            self.width(),
            self.threshold,
            self.horizon_steps,
            self.best_rho,
            self.best_score,
            join(&self.rho_grid),
            join(&self.scores),
        )
    }
}

/// Scores each ρ by the mean of its ⟨RMSE⟩ row over the first
/// `horizon_steps` steps and returns the maximal contiguous run of grid
/// points with score ≤ `threshold` that contains the best-scoring ρ.
/// Non-finite scores never qualify.
pub fn detect_valley(surface: &ErrorSurface, threshold: f64, horizon_steps: usize) -> Result<ValleyReport> {
    if horizon_steps == 0 || horizon_steps > surface.steps() {
        return Err(Error::invalid(format!(
            "horizon_steps={horizon_steps} must lie in 1..={}",
            surface.steps()
        )));
    }
    if surface.rho_grid.is_empty() {
        return Err(Error::invalid("empty rho grid"));
    }
    let scores: Vec<f64> = (0..surface.rho_grid.len())
        .map(|i| surface.mean.row(i)[..horizon_steps].iter().sum::<f64>() / horizon_steps as f64)
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        let b = scores[best];
        if s < &b || (!b.is_finite() && s.is_finite()) {
            best = i;
        }
    }
    let ok = |i: usize| scores[i].is_finite() && scores[i] <= threshold;
    let (rho_lo, rho_hi) = if ok(best) {
        let mut lo = best;
        while lo > 0 && ok(lo - 1) {
            lo -= 1;
        }
        let mut hi = best;
        while hi + 1 < scores.len() && ok(hi + 1) {
            hi += 1;
        }
        (Some(surface.rho_grid[lo]), Some(surface.rho_grid[hi]))
    } else {
        (None, None)
    };
    Ok(ValleyReport {
        rho_lo,
        rho_hi,
        threshold,
        horizon_steps,
        best_rho: surface.rho_grid[best],
        best_score: scores[best],
        rho_grid: surface.rho_grid.clone(),
        scores,
    })
}
