//! Execution of sweep cells and aggregation into an error surface.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::esn::{EsnHyperParams, EsnModel, InputMap, ReservoirState};
use crate::field::FieldSeries;
use crate::metrics::{
    detect_valley, divergence_sentinel, ensemble_stats, rmse_per_step, training_error, ErrorSurface, ErrorTrace,
    ValleyReport,
};
use crate::sweep::seeds::{derive_seeds, RunSeeds};
use crate::sweep::spec::{StartMode, SweepSpec};
use crate::topology::ReservoirNetwork;

/// Result of one `(ρ, realization)` cell.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub rho: f64,
    pub rho_index: usize,
    pub realization_index: usize,
    pub seeds: RunSeeds,
    /// `None` when the run failed.
    pub trace: Option<ErrorTrace>,
    pub training_error: Option<f64>,
    /// Per-step RMSE of the one-step outputs during a cold-start warmup.
    pub warmup_rmse: Option<Vec<f64>>,
    pub failure: Option<String>,
    /// Seconds spent in this run.
    pub wall_time: f64,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// Equality of every field except `wall_time`, bit for bit.
    pub fn same_result(&self, other: &RunRecord) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        let trace_bits = |t: &Option<ErrorTrace>| t.as_ref().map(|t| (bits(&t.rmse), t.dt.to_bits(), t.diverged_at));
        self.rho.to_bits() == other.rho.to_bits()
            && self.rho_index == other.rho_index
            && self.realization_index == other.realization_index
            && self.seeds == other.seeds
            && trace_bits(&self.trace) == trace_bits(&other.trace)
            && self.training_error.map(f64::to_bits) == other.training_error.map(f64::to_bits)
            && self.warmup_rmse.as_deref().map(bits) == other.warmup_rmse.as_deref().map(bits)
            && self.failure == other.failure
    }
}

/// A sweep with its truth series generated and split.
pub struct SweepPlan {
    pub spec: SweepSpec,
    pub truth: Arc<FieldSeries<f64>>,
    train: FieldSeries<f64>,
    warmup: Option<FieldSeries<f64>>,
    target: FieldSeries<f64>,
    hyper: EsnHyperParams,
    rho_grid: Vec<f64>,
    lyapunov_max: Option<f64>,
    sentinel: f64,
}

/// Everything a sweep produces.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub surface: ErrorSurface,
    pub valley: ValleyReport,
    /// Sorted by `(rho_index, realization_index)`.
    pub records: Vec<RunRecord>,
    pub failures: usize,
}

impl SweepPlan {
    /// Validates `spec` and generates its truth series once.
    pub fn new(spec: SweepSpec) -> Result<Self> {
        spec.validate()?;
        let system = spec.system_config()?;
        let truth = system.generate(spec.truth_steps(), spec.encoding())?;
        Self::with_truth(spec, Arc::new(truth))
    }

    /// Uses an existing truth series, which must have at least
    /// [`SweepSpec::truth_steps`] samples.
    pub fn with_truth(spec: SweepSpec, truth: Arc<FieldSeries<f64>>) -> Result<Self> {
        spec.validate()?;
        if truth.len() < spec.truth_steps() {
            return Err(Error::invalid(format!(
                "truth series has {} samples, sweep needs {}",
                truth.len(),
                spec.truth_steps()
            )));
        }
        let system = spec.system_config()?;
        let s = &spec.sweep;
        let train = truth.slice(0..s.train_steps)?;
        let warmup = match s.start_mode {
            StartMode::Warm => None,
            StartMode::Cold => Some(truth.slice(s.train_steps..s.train_steps + s.warmup_steps)?),
        };
        let lead = spec.lead_steps();
        let target = truth.slice(lead..lead + s.horizon)?;
        let hyper = spec.hyper(truth.channels(), truth.dt());
        hyper.validate()?;
        Ok(SweepPlan {
            rho_grid: spec.rho_grid(),
            lyapunov_max: system.lyapunov_max(),
            sentinel: divergence_sentinel(&truth),
            hyper,
            train,
            warmup,
            target,
            truth,
            spec,
        })
    }

    pub fn rho_grid(&self) -> &[f64] {
        &self.rho_grid
    }

    pub fn lyapunov_max(&self) -> Option<f64> {
        self.lyapunov_max
    }

    /// Value substituted for diverged or missing trace entries.
    pub fn sentinel(&self) -> f64 {
        self.sentinel
    }

    pub fn hyper(&self) -> &EsnHyperParams {
        &self.hyper
    }

    /// Builds the untrained model for one cell.
    pub fn build_model(&self, rho: f64, seeds: &RunSeeds) -> Result<EsnModel<f64>> {
        let topo = self.spec.topology_spec(seeds.topology);
        let reservoir = ReservoirNetwork::build(&topo, seeds.weights, rho)?;
        let input = InputMap::generate(self.hyper.n, self.hyper.input_dim, self.hyper.input_scale, seeds.input)?;
        EsnModel::new(self.hyper.clone(), input, reservoir)
    }

    /// Builds and trains the model for `(rho, seeds)`, returning it with the
    /// end-of-training state.
    pub fn train_model(&self, rho: f64, seeds: &RunSeeds) -> Result<(EsnModel<f64>, ReservoirState<f64>)> {
        let mut model = self.build_model(rho, seeds)?;
        let fit = model.fit(&self.train, ReservoirState::zeros(self.hyper.n))?;
        Ok((model, fit.final_state))
    }

    /// Training error `E` of a trained model on the training segment.
    pub fn training_error(&self, model: &EsnModel<f64>) -> Result<f64> {
        training_error(model, &self.train, ReservoirState::zeros(self.hyper.n))
    }

    /// Runs one cell. Numerical and configuration failures are captured in
    /// the record rather than returned.
    pub fn run_single(&self, rho_index: usize, realization_index: usize) -> RunRecord {
        let started = Instant::now();
        let rho = self.rho_grid[rho_index];
        let seeds = derive_seeds(self.spec.sweep.master_seed, rho_index, realization_index);
        let mut record = RunRecord {
            rho,
            rho_index,
            realization_index,
            seeds,
            trace: None,
            training_error: None,
            warmup_rmse: None,
            failure: None,
            wall_time: 0.0,
        };
        match self.execute(rho, &seeds) {
            Ok((trace, e, warm)) => {
                record.trace = Some(trace);
                record.training_error = Some(e);
                record.warmup_rmse = warm;
            }
            Err(err) => record.failure = Some(err.to_string()),
        }
        record.wall_time = started.elapsed().as_secs_f64();
        record
    }

    fn execute(&self, rho: f64, seeds: &RunSeeds) -> Result<(ErrorTrace, f64, Option<Vec<f64>>)> {
        let (model, end_state) = self.train_model(rho, seeds)?;
        let e = self.training_error(&model)?;
        let horizon = self.spec.sweep.horizon;
        let prediction = match &self.warmup {
            None => model.predict(None, end_state, horizon)?,
            Some(w) => model.predict(Some(w), ReservoirState::zeros(self.hyper.n), horizon)?,
        };
        let truth = self.target.slice(0..prediction.series.len())?;
        let mut trace = if prediction.series.is_empty() {
            ErrorTrace {
                rmse: Vec::new(),
                dt: self.target.dt(),
                lyapunov_max: None,
                diverged_at: None,
            }
        } else {
            rmse_per_step(&truth, &prediction.series)?
        };
        trace.lyapunov_max = self.lyapunov_max;
        trace.diverged_at = prediction.diverged_at;
        Ok((trace, e, prediction.warmup_rmse))
    }

    /// Runs every cell on up to `workers` threads (all cores when `None`)
    /// and aggregates. Results do not depend on the worker count.
    pub fn run(&self, workers: Option<usize>) -> Result<SweepResult> {
        let cells: Vec<(usize, usize)> = (0..self.rho_grid.len())
            .flat_map(|i| (0..self.spec.sweep.ensemble_size).map(move |j| (i, j)))
            .collect();
        let records: Vec<RunRecord> = if workers == Some(1) {
            cells.iter().map(|&(i, j)| self.run_single(i, j)).collect()
        } else {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(w) = workers {
                builder = builder.num_threads(w);
            }
            let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| cells.par_iter().map(|&(i, j)| self.run_single(i, j)).collect())
        };
        self.aggregate(records)
    }

    /// Combines records (any order) into a surface and valley report.
    pub fn aggregate(&self, mut records: Vec<RunRecord>) -> Result<SweepResult> {
        records.sort_by_key(|r| (r.rho_index, r.realization_index));
        let horizon = self.spec.sweep.horizon;
        let mut rows = Vec::with_capacity(self.rho_grid.len());
        let mut sizes = Vec::with_capacity(self.rho_grid.len());
        for i in 0..self.rho_grid.len() {
            let traces: Vec<ErrorTrace> = records
                .iter()
                .filter(|r| r.rho_index == i)
                .filter_map(|r| r.trace.clone())
                .map(|mut t| {
                    t.rmse.resize(horizon, f64::NAN);
                    t
                })
                .collect();
            sizes.push(traces.len());
            if traces.is_empty() {
                rows.push(crate::metrics::EnsembleStats {
                    mean: vec![self.sentinel; horizon],
                    std: vec![0.0; horizon],
                });
            } else {
                rows.push(ensemble_stats(&traces, Some(self.sentinel))?);
            }
        }
        let surface = ErrorSurface::from_rows(self.rho_grid.clone(), &rows, sizes, self.target.dt(), self.lyapunov_max)?;
        let valley = detect_valley(&surface, self.spec.sweep.threshold, self.spec.valley_horizon())?;
        let failures = records.iter().filter(|r| !r.succeeded()).count();
        Ok(SweepResult {
            surface,
            valley,
            records,
            failures,
        })
    }
}

impl SweepResult {
    /// Mean valid-prediction time (in units of `dt`) per ρ over successful
    /// runs; failed runs count as zero.
    pub fn mean_valid_time(&self, threshold: f64) -> Vec<f64> {
        let n = self.surface.rho_grid.len();
        let mut sum = vec![0.0; n];
        let mut count = vec![0usize; n];
        for r in &self.records {
            count[r.rho_index] += 1;
            if let Some(t) = &r.trace {
                sum[r.rho_index] += t.valid_time(threshold);
            }
        }
        sum.iter().zip(&count).map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 }).collect()
    }

    /// Mean training error per ρ over successful runs (`NaN` if none).
    pub fn mean_training_error(&self) -> Vec<f64> {
        let n = self.surface.rho_grid.len();
        let mut sum = vec![0.0; n];
        let mut count = vec![0usize; n];
        for r in &self.records {
            if let Some(e) = r.training_error {
                sum[r.rho_index] += e;
                count[r.rho_index] += 1;
            }
        }
        sum.iter().zip(&count).map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 }).collect()
    }
}
