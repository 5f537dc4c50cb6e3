use crate::error::{Error, Result};
use crate::esn::readout::RidgeAccumulator;
use crate::esn::{EsnHyperParams, InputMap};
use crate::field::{FieldSeries, SeriesMeta};
use crate::linalg::{dot, DenseMatrix};
use crate::topology::ReservoirNetwork;
use crate::Real;

/// Reservoir activation vector `r(t)` and the number of updates applied so far.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirState<T> {
    pub r: Vec<T>,
    pub step_index: usize,
}

impl<T: Real> ReservoirState<T> {
    pub fn zeros(n: usize) -> Self {
        ReservoirState {
            r: vec![T::zero(); n],
            step_index: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().all(|v| v.is_finite())
    }
}

/// Squares components at even 1-based positions (0-based odd indices).
///
/// Breaks the `r → -r` symmetry of the odd `tanh` update so that the linear
/// readout can represent even functions of the input.
pub fn normalize_state<T: Real>(r: &[T]) -> Vec<T> {
    let mut out = r.to_vec();
    normalize_into(r, &mut out);
    out
}

pub fn normalize_into<T: Real>(r: &[T], out: &mut [T]) {
    debug_assert_eq!(r.len(), out.len());
    for (i, (o, v)) in out.iter_mut().zip(r).enumerate() {
        *o = if i % 2 == 1 { *v * *v } else { *v };
    }
}

/// Normalised states collected by [`EsnModel::listen`].
#[derive(Clone, Debug)]
pub struct Listened<T> {
    /// `N × T`; column `t` is `r'` after consuming input sample `t`.
    pub states: DenseMatrix<T>,
    pub final_state: ReservoirState<T>,
}

#[derive(Clone, Debug)]
pub struct FitReport<T> {
    /// State after consuming the last training sample: the warm-start state.
    pub final_state: ReservoirState<T>,
    /// Number of (state, target) pairs used in the regression.
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct Prediction<T> {
    /// Closed-loop output; column `h` estimates the sample `h + 1` steps after
    /// the last consumed input. Truncated at divergence.
    pub series: FieldSeries<T>,
    /// Closed-loop step at which a non-finite value appeared.
    pub diverged_at: Option<usize>,
    /// One-step RMSE over the cold-start spin-up, if a warm-up series was given.
    pub warmup_rmse: Option<Vec<T>>,
    pub final_state: ReservoirState<T>,
}

/// A runnable echo-state network.
#[derive(Clone, Debug, PartialEq)]
pub struct EsnModel<T> {
    pub hyper: EsnHyperParams,
    pub input_map: InputMap<T>,
    pub reservoir: ReservoirNetwork<T>,
    /// `L × N` readout; `None` until trained.
    pub readout: Option<DenseMatrix<T>>,
    /// Metadata of the training series, inherited by predictions.
    pub meta: Option<SeriesMeta>,
}

impl<T: Real> EsnModel<T> {
    pub fn new(hyper: EsnHyperParams, input_map: InputMap<T>, reservoir: ReservoirNetwork<T>) -> Result<Self> {
        hyper.validate()?;
        if input_map.n() != hyper.n || reservoir.n() != hyper.n {
            return Err(Error::DimensionMismatch {
                context: "EsnModel::new (reservoir size)",
                expected: hyper.n,
                actual: if input_map.n() != hyper.n { input_map.n() } else { reservoir.n() },
            });
        }
        if input_map.inputs() != hyper.input_dim {
            return Err(Error::DimensionMismatch {
                context: "EsnModel::new (input dimension)",
                expected: hyper.input_dim,
                actual: input_map.inputs(),
            });
        }
        Ok(EsnModel {
            hyper,
            input_map,
            reservoir,
            readout: None,
            meta: None,
        })
    }

    pub fn n(&self) -> usize {
        self.hyper.n
    }

    pub fn is_trained(&self) -> bool {
        self.readout.is_some()
    }

    /// `r ← tanh(W_res·r + W_IR·u)` in place; `scratch` has length `N`.
    #[inline]
    fn advance(&self, r: &mut [T], u: &[T], scratch: &mut [T]) {
        self.reservoir.weights.matvec_into(r, scratch);
        let w_in = &self.input_map.weights;
        for (i, (ri, si)) in r.iter_mut().zip(scratch.iter()).enumerate() {
            let (idx, val) = w_in.row(i);
            let mut drive = *si;
            for (c, w) in idx.iter().zip(val) {
                drive = drive + *w * u[*c];
            }
            *ri = drive.tanh();
        }
    }

    fn check_input(&self, u: &[T]) -> Result<()> {
        if u.len() != self.hyper.input_dim {
            return Err(Error::DimensionMismatch {
                context: "EsnModel::step (input)",
                expected: self.hyper.input_dim,
                actual: u.len(),
            });
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite reservoir input"));
        }
        Ok(())
    }

    pub fn step(&self, state: &ReservoirState<T>, u: &[T]) -> Result<ReservoirState<T>> {
        self.check_input(u)?;
        if state.r.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "EsnModel::step (state)",
                expected: self.n(),
                actual: state.r.len(),
            });
        }
        let mut r = state.r.clone();
        let mut scratch = vec![T::zero(); self.n()];
        self.advance(&mut r, u, &mut scratch);
        Ok(ReservoirState {
            r,
            step_index: state.step_index + 1,
        })
    }

    fn check_series(&self, series: &FieldSeries<T>) -> Result<()> {
        if series.channels() != self.hyper.input_dim {
            return Err(Error::DimensionMismatch {
                context: "series channels",
                expected: self.hyper.input_dim,
                actual: series.channels(),
            });
        }
        Ok(())
    }

    /// Drives the reservoir open-loop through every sample of `series`.
    pub fn listen(&self, series: &FieldSeries<T>, initial: ReservoirState<T>) -> Result<Listened<T>> {
        self.check_series(series)?;
        if series.is_empty() {
            return Err(Error::EmptySeries);
        }
        let n = self.n();
        let mut states = DenseMatrix::zeros(n, series.len());
        let mut state = initial;
        let mut u = vec![T::zero(); series.channels()];
        let mut scratch = vec![T::zero(); n];
        let mut rn = vec![T::zero(); n];
        for t in 0..series.len() {
            series.column_into(t, &mut u);
            self.advance(&mut state.r, &u, &mut scratch);
            state.step_index += 1;
            normalize_into(&state.r, &mut rn);
            states.set_column(t, &rn);
        }
        Ok(Listened {
            states,
            final_state: state,
        })
    }

    /// Like [`EsnModel::listen`] but hands each normalised state `r'(t)` to
    /// `visit(t, r')` instead of storing it. Returns the final raw state.
    pub fn listen_each(
        &self,
        series: &FieldSeries<T>,
        initial: ReservoirState<T>,
        mut visit: impl FnMut(usize, &[T]),
    ) -> Result<ReservoirState<T>> {
        self.check_series(series)?;
        if series.is_empty() {
            return Err(Error::EmptySeries);
        }
        let n = self.n();
        let mut state = initial;
        let mut u = vec![T::zero(); series.channels()];
        let mut scratch = vec![T::zero(); n];
        let mut rn = vec![T::zero(); n];
        for t in 0..series.len() {
            series.column_into(t, &mut u);
            self.advance(&mut state.r, &u, &mut scratch);
            state.step_index += 1;
            normalize_into(&state.r, &mut rn);
            visit(t, &rn);
        }
        Ok(state)
    }

    /// Streams `series` through the reservoir from `initial` and fits the
    /// readout to one-step-ahead targets `v(t) = u(t + 1)`.
    ///
    /// The first `transient_steps` states are dropped; the state after the
    /// final sample (which has no target) is returned for a warm start.
    pub fn fit(&mut self, series: &FieldSeries<T>, initial: ReservoirState<T>) -> Result<FitReport<T>> {
        self.check_series(series)?;
        let s = self.hyper.transient_steps;
        if series.len() < s + 2 {
            return Err(Error::invalid(format!(
                "training series of {} samples leaves no targets after {} transient steps",
                series.len(),
                s
            )));
        }
        let n = self.n();
        let m = series.channels();
        let mut acc = RidgeAccumulator::new(n, self.hyper.output_dim);
        let mut state = initial;
        let mut u = vec![T::zero(); m];
        let mut target = vec![T::zero(); m];
        let mut scratch = vec![T::zero(); n];
        let mut rn = vec![T::zero(); n];
        for t in 0..series.len() {
            series.column_into(t, &mut u);
            self.advance(&mut state.r, &u, &mut scratch);
            state.step_index += 1;
            if t + 1 < series.len() && t >= s {
                normalize_into(&state.r, &mut rn);
                series.column_into(t + 1, &mut target);
                acc.push(&rn, &target);
            }
        }
        let samples = acc.samples();
        self.readout = Some(acc.solve(T::lit(self.hyper.ridge))?);
        self.meta = Some(series.meta.clone());
        Ok(FitReport {
            final_state: state,
            samples,
        })
    }

    /// `W_RO · r'` for the given raw state.
    pub fn output(&self, state: &ReservoirState<T>) -> Result<Vec<T>> {
        let w = self.readout.as_ref().ok_or(Error::Untrained)?;
        Ok(w.matvec(&normalize_state(&state.r)))
    }

    /// Runs the closed loop for `horizon` steps.
    ///
    /// With `warmup = Some(series)` the reservoir is first driven open-loop by
    /// the true samples (cold start from `start`, usually the zero state);
    /// with `None`, `start` must already be a driven state (warm start).
    pub fn predict(
        &self,
        warmup: Option<&FieldSeries<T>>,
        start: ReservoirState<T>,
        horizon: usize,
    ) -> Result<Prediction<T>> {
        let w = self.readout.as_ref().ok_or(Error::Untrained)?;
        let n = self.n();
        if start.r.len() != n {
            return Err(Error::DimensionMismatch {
                context: "predict (start state)",
                expected: n,
                actual: start.r.len(),
            });
        }
        let mut meta = self.meta.clone().unwrap_or(SeriesMeta {
            dt: self.hyper.dt,
            grid: Vec::new(),
            encoding: crate::field::Encoding::RealScalar,
            system_tag: String::new(),
        });
        meta.system_tag = format!("{}:prediction", meta.system_tag);
        let l = self.hyper.output_dim;
        let mut state = start;
        let mut scratch = vec![T::zero(); n];
        let mut rn = vec![T::zero(); n];
        let mut warmup_rmse = None;

        if let Some(ws) = warmup {
            self.check_series(ws)?;
            if ws.is_empty() {
                return Err(Error::EmptySeries);
            }
            let mut u = vec![T::zero(); ws.channels()];
            let mut errs = Vec::with_capacity(ws.len().saturating_sub(1));
            for t in 0..ws.len() {
                ws.column_into(t, &mut u);
                self.advance(&mut state.r, &u, &mut scratch);
                state.step_index += 1;
                if t + 1 < ws.len() {
                    normalize_into(&state.r, &mut rn);
                    let mut se = T::zero();
                    for k in 0..l {
                        let d = dot(w.row(k), &rn) - ws.get(k, t + 1);
                        se = se + d * d;
                    }
                    errs.push((se / T::from_usize_lossy(l)).sqrt());
                }
            }
            warmup_rmse = Some(errs);
        }

        let mut cols: Vec<Vec<T>> = Vec::with_capacity(horizon);
        let mut diverged_at = None;
        let mut o = vec![T::zero(); l];
        for h in 0..horizon {
            normalize_into(&state.r, &mut rn);
            for (k, ok) in o.iter_mut().enumerate() {
                *ok = dot(w.row(k), &rn);
            }
            if !o.iter().all(|v| v.is_finite()) {
                diverged_at = Some(h);
                break;
            }
            cols.push(o.clone());
            if h + 1 < horizon {
                self.advance(&mut state.r, &o, &mut scratch);
                state.step_index += 1;
                if !state.is_finite() {
                    diverged_at = Some(h + 1);
                    break;
                }
            }
        }
        let series = if cols.is_empty() {
            FieldSeries::empty(l, meta)
        } else {
            let mut data = DenseMatrix::zeros(l, cols.len());
            for (t, c) in cols.iter().enumerate() {
                data.set_column(t, c);
            }
            // magnitude-encoded outputs may dip below zero; keep the raw values
            FieldSeries::new(data, SeriesMeta {
                encoding: match meta.encoding {
                    crate::field::Encoding::Magnitude => crate::field::Encoding::RealScalar,
                    e => e,
                },
                ..meta
            })?
        };
        Ok(Prediction {
            series,
            diverged_at,
            warmup_rmse,
            final_state: state,
        })
    }
}
