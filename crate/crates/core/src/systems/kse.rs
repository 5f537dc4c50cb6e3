//! Kuramoto–Sivashinsky equation `u_t + u u_x + u_xx + u_xxxx = 0` on a
//! periodic domain, integrated pseudo-spectrally with ETDRK4.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::sampled::SampledField;
use crate::systems::spectral::{Etdrk4, Etdrk4Work, Spectral1d};
use crate::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KseParams {
    pub domain_length: f64,
    pub x_points: usize,
    /// Sampling interval of the returned series.
    pub dt: f64,
    /// Integrator steps per sample.
    pub substeps: usize,
    /// Time discarded before the first sample.
    pub transient: f64,
    /// Largest Lyapunov exponent, used only to express times in Lyapunov units.
    pub lyapunov_max: f64,
    pub seed: u64,
    /// Number of cosine modes in the initial condition.
    pub ic_modes: usize,
    /// Mode amplitudes are uniform on `[−ic_amplitude, ic_amplitude]`.
    pub ic_amplitude: f64,
}

impl Default for KseParams {
    fn default() -> Self {
        KseParams {
            domain_length: 22.0,
            x_points: 64,
            dt: 0.25,
            substeps: 10,
            transient: 2000.0,
            lyapunov_max: 0.05,
            seed: 0,
            ic_modes: 8,
            ic_amplitude: 0.1,
        }
    }
}

impl KseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("KSE dt must be positive"));
        }
        if self.substeps == 0 {
            return Err(Error::invalid("KSE substeps must be at least 1"));
        }
        if !(self.transient >= 0.0 && self.transient.is_finite()) {
            return Err(Error::invalid("KSE transient must be nonnegative"));
        }
        if self.ic_modes >= self.x_points / 2 {
            return Err(Error::invalid("KSE ic_modes must be below the Nyquist mode"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.x_points)
            .map(|i| self.domain_length * i as f64 / self.x_points as f64)
            .collect()
    }

    /// Integrator step `dt / substeps`.
    pub fn h(&self) -> f64 {
        self.dt / self.substeps as f64
    }
}

/// Stateful integrator; the state lives in Fourier space.
pub struct KseSolver<T: Real> {
    params: KseParams,
    spectral: Spectral1d<T>,
    scheme: Etdrk4<T>,
    work: Etdrk4Work<T>,
    v: Vec<Complex<T>>,
    buf: Vec<Complex<T>>,
    steps_taken: usize,
}

impl<T: Real> KseSolver<T> {
    /// Starts from the seeded random cosine initial condition.
    pub fn new(params: KseParams) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let tau = 2.0 * std::f64::consts::PI;
        let modes: Vec<(f64, f64)> = (0..params.ic_modes)
            .map(|_| {
                let c = rng.gen_range(-params.ic_amplitude..=params.ic_amplitude);
                let phase = rng.gen_range(0.0..tau);
                (c, phase)
            })
            .collect();
        let u: Vec<T> = params
            .grid()
            .iter()
            .map(|&x| {
                let s: f64 = modes
                    .iter()
                    .enumerate()
                    .map(|(m, &(c, phi))| c * (tau * (m + 1) as f64 * x / params.domain_length + phi).cos())
                    .sum();
                T::lit(s)
            })
            .collect();
        Self::from_state(params, &u)
    }

    /// Starts from an explicit grid field `u`.
    pub fn from_state(params: KseParams, u: &[T]) -> Result<Self> {
        params.validate()?;
        if u.len() != params.x_points {
            return Err(Error::DimensionMismatch {
                context: "KSE initial state",
                expected: params.x_points,
                actual: u.len(),
            });
        }
        let spectral = Spectral1d::new(params.x_points, params.domain_length)?;
        let linear: Vec<Complex<T>> = spectral
            .wavenumbers
            .iter()
            .map(|&q| Complex::new(q * q - q * q * q * q, T::zero()))
            .collect();
        let scheme = Etdrk4::new(&linear, params.h())?;
        let n = params.x_points;
        let mut solver = KseSolver {
            params,
            spectral,
            scheme,
            work: Etdrk4Work::new(n),
            v: vec![Complex::default(); n],
            buf: vec![Complex::default(); n],
            steps_taken: 0,
        };
        solver.set_state(u);
        enforce_real(&mut solver.v);
        Ok(solver)
    }

    pub fn params(&self) -> &KseParams {
        &self.params
    }

    pub fn set_state(&mut self, u: &[T]) {
        for (v, &x) in self.v.iter_mut().zip(u) {
            *v = Complex::new(x, T::zero());
        }
        self.spectral.forward(&mut self.v);
    }

    /// Current field on the grid.
    pub fn state(&mut self) -> Vec<T> {
        self.buf.copy_from_slice(&self.v);
        self.spectral.inverse(&mut self.buf);
        self.buf.iter().map(|c| c.re).collect()
    }

    /// Fourier coefficients of the current field (unnormalized FFT order).
    pub fn spectrum(&self) -> &[Complex<T>] {
        &self.v
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Takes `n` integrator steps of size [`KseParams::h`].
    pub fn advance(&mut self, n: usize) -> Result<()> {
        let KseSolver {
            spectral,
            scheme,
            work,
            v,
            buf,
            ..
        } = self;
        let half = T::lit(0.5);
        for _ in 0..n {
            scheme.step(v, work, |vh, out| {
                buf.copy_from_slice(vh);
                spectral.inverse(buf);
                for z in buf.iter_mut() {
                    *z = Complex::new(z.re * z.re, T::zero());
                }
                spectral.forward(buf);
                for k in 0..out.len() {
                    // −½ i q · FFT(u²)
                    let g = -half * spectral.wavenumbers[k] * spectral.dealias[k];
                    out[k] = Complex::new(-g * buf[k].im, g * buf[k].re);
                }
            });
            enforce_real(v);
            self.steps_taken += 1;
            if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { step: self.steps_taken });
            }
        }
        Ok(())
    }

    /// Advances by `time` (rounded to whole integrator steps).
    pub fn advance_time(&mut self, time: f64) -> Result<()> {
        let n = (time / self.params.h()).round() as usize;
        self.advance(n)
    }
}

/// Projects a spectrum onto that of a real field, `v̂_{−m} = conj(v̂_m)`.
/// Without it rounding in the imaginary part grows through the unstable
/// long-wave modes, which the nonlinear term never damps.
fn enforce_real<T: Real>(v: &mut [Complex<T>]) {
    let n = v.len();
    let half = T::lit(0.5);
    v[0].im = T::zero();
    v[n / 2].im = T::zero();
    for k in 1..n / 2 {
        let s = (v[k] + v[n - k].conj()) * half;
        v[k] = s;
        v[n - k] = s.conj();
    }
}

/// Integrates from the seeded initial condition, discards the transient and
/// returns `total_steps` samples spaced by `params.dt`.
pub fn solve_kse<T: Real>(params: &KseParams, total_steps: usize) -> Result<SampledField<T>> {
    let mut solver = KseSolver::<T>::new(params.clone())?;
    solver.advance_time(params.transient)?;
    let mut samples = Vec::with_capacity(total_steps);
    for j in 0..total_steps {
        if j > 0 {
            solver.advance(params.substeps)?;
        }
        samples.push(solver.state());
    }
    Ok(SampledField {
        samples,
        dt: params.dt,
        grid: params.grid(),
        system_tag: format!("kse:L={}:seed={}", params.domain_length, params.seed),
    })
}
