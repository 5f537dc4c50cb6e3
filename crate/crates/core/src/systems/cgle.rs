//! One-dimensional complex Ginzburg–Landau equation
//! `u_t = u + (1 + iα) u_xx − (1 + iβ) |u|² u`, periodic, integrated
//! pseudo-spectrally with ETDRK4.

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
pub struct CglParams {
    /// Linear dispersion coefficient α.
    pub alpha_disp: f64,
    /// Nonlinear dispersion coefficient β.
    pub beta_disp: f64,
    pub domain_start: f64,
    pub domain_end: f64,
    pub x_points: usize,
    pub integrate_dt: f64,
    pub sample_dt: f64,
    /// Time discarded before the first sample.
    pub transient: f64,
    pub lyapunov_max: f64,
    pub seed: u64,
    /// Real and imaginary parts of the initial field are uniform on
    /// `[−ic_amplitude, ic_amplitude]` at each grid point.
    pub ic_amplitude: f64,
}

impl Default for CglParams {
    fn default() -> Self {
        CglParams {
            alpha_disp: 2.0,
            beta_disp: -2.0,
            domain_start: -9.0,
            domain_end: 9.0,
            x_points: 32,
            integrate_dt: 1e-4,
            sample_dt: 0.07,
            transient: 200.0,
            lyapunov_max: 0.22,
            seed: 0,
            ic_amplitude: 0.01,
        }
    }
}

impl CglParams {
    pub fn length(&self) -> f64 {
        self.domain_end - self.domain_start
    }

    /// Integrator steps per sample; errors unless `sample_dt / integrate_dt`
    /// is an integer to within 1e-9 relative.
    pub fn substeps(&self) -> Result<usize> {
        let ratio = self.sample_dt / self.integrate_dt;
        let n = ratio.round();
        if !(n >= 1.0) || (ratio - n).abs() > 1e-9 * n {
            return Err(Error::invalid(format!(
                "sample_dt={} is not an integer multiple of integrate_dt={}",
                self.sample_dt, self.integrate_dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.integrate_dt > 0.0 && self.sample_dt > 0.0) {
            return Err(Error::invalid("CGLE time steps must be positive"));
        }
        if !(self.length() > 0.0 && self.length().is_finite()) {
            return Err(Error::invalid("CGLE domain must have positive length"));
        }
        if !(self.transient >= 0.0 && self.transient.is_finite()) {
            return Err(Error::invalid("CGLE transient must be nonnegative"));
        }
        self.substeps().map(|_| ())
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.x_points)
            .map(|i| self.domain_start + self.length() * i as f64 / self.x_points as f64)
            .collect()
    }
}

/// Stateful integrator; the state lives in Fourier space.
pub struct CglSolver<T: Real> {
    params: CglParams,
    spectral: Spectral1d<T>,
    scheme: Etdrk4<T>,
    work: Etdrk4Work<T>,
    v: Vec<Complex<T>>,
    buf: Vec<Complex<T>>,
    steps_taken: usize,
}

impl<T: Real> CglSolver<T> {
    /// Starts from seeded small-amplitude noise.
    pub fn new(params: CglParams) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let a = params.ic_amplitude;
        let u: Vec<Complex<T>> = (0..params.x_points)
            .map(|_| {
                let re = rng.gen_range(-a..=a);
                let im = rng.gen_range(-a..=a);
                Complex::new(T::lit(re), T::lit(im))
            })
            .collect();
        Self::from_state(params, &u)
    }

    pub fn from_state(params: CglParams, u: &[Complex<T>]) -> Result<Self> {
        params.validate()?;
        if u.len() != params.x_points {
            return Err(Error::DimensionMismatch {
                context: "CGLE initial state",
                expected: params.x_points,
                actual: u.len(),
            });
        }
        let spectral = Spectral1d::new(params.x_points, params.length())?;
        let alpha = T::lit(params.alpha_disp);
        let linear: Vec<Complex<T>> = spectral
            .wavenumbers
            .iter()
            .map(|&q| Complex::new(T::one() - q * q, -alpha * q * q))
            .collect();
        let scheme = Etdrk4::new(&linear, params.integrate_dt)?;
        let n = params.x_points;
        let mut solver = CglSolver {
            params,
            spectral,
            scheme,
            work: Etdrk4Work::new(n),
            v: u.to_vec(),
            buf: vec![Complex::default(); n],
            steps_taken: 0,
        };
        solver.spectral.forward(&mut solver.v);
        Ok(solver)
    }

    pub fn params(&self) -> &CglParams {
        &self.params
    }

    pub fn state(&mut self) -> Vec<Complex<T>> {
        self.buf.copy_from_slice(&self.v);
        self.spectral.inverse(&mut self.buf);
        self.buf.clone()
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Takes `n` integrator steps of size `integrate_dt`.
    pub fn advance(&mut self, n: usize) -> Result<()> {
        let CglSolver {
            spectral,
            scheme,
            work,
            v,
            buf,
            params,
            ..
        } = self;
        let coupling = Complex::new(-T::one(), -T::lit(params.beta_disp));
        for _ in 0..n {
            scheme.step(v, work, |vh, out| {
                buf.copy_from_slice(vh);
                spectral.inverse(buf);
                for z in buf.iter_mut() {
                    *z = *z * z.norm_sqr();
                }
                spectral.forward(buf);
                for k in 0..out.len() {
                    out[k] = coupling * buf[k] * spectral.dealias[k];
                }
            });
            self.steps_taken += 1;
            if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { step: self.steps_taken });
            }
        }
        Ok(())
    }

    /// Advances by `time` (rounded to whole integrator steps).
    pub fn advance_time(&mut self, time: f64) -> Result<()> {
        let n = (time / self.params.integrate_dt).round() as usize;
        self.advance(n)
    }
}

/// Integrates from seeded noise, discards the transient and returns
/// `total_samples` complex samples spaced by `sample_dt`.
pub fn solve_cgle<T: Real>(params: &CglParams, total_samples: usize) -> Result<SampledField<Complex<T>>> {
    let substeps = params.substeps()?;
    let mut solver = CglSolver::<T>::new(params.clone())?;
    solver.advance_time(params.transient)?;
    let mut samples = Vec::with_capacity(total_samples);
    for j in 0..total_samples {
        if j > 0 {
            solver.advance(substeps)?;
        }
        samples.push(solver.state());
    }
    Ok(SampledField {
        samples,
        dt: params.sample_dt,
        grid: params.grid(),
        system_tag: format!(
            "cgle:alpha={}:beta={}:seed={}",
            params.alpha_disp, params.beta_disp, params.seed
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substep_ratio() {
        assert_eq!(CglParams::default().substeps().unwrap(), 700);
        let p = CglParams {
            sample_dt: 0.07005,
            ..CglParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn grid_covers_domain_periodically() {
        let g = CglParams::default().grid();
        assert_eq!(g.len(), 32);
        assert_eq!(g[0], -9.0);
        assert!((g[31] - (9.0 - 18.0 / 32.0)).abs() < 1e-14);
    }
}
