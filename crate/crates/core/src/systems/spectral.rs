//! Periodic Fourier pseudo-spectral machinery and the fourth-order
//! exponential time-differencing Runge–Kutta scheme (ETDRK4) for
//! `û' = L̂ û + N̂(û)` with diagonal `L̂`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::Real;

/// Number of contour points used to evaluate the ETDRK4 coefficients.
const CONTOUR_POINTS: usize = 64;

/// Forward/inverse FFT pair with wavenumbers and a 2/3-rule mask for a
/// periodic grid of `n` points on a domain of length `length`.
pub struct Spectral1d<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    /// `q_m = 2πm/length` in FFT order (`m = 0, 1, …, n/2−1, −n/2, …, −1`).
    pub wavenumbers: Vec<T>,
    /// `1` for retained modes, `0` for `|m| ≥ n/3`.
    pub dealias: Vec<T>,
}

impl<T: Real> Spectral1d<T> {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("grid size {n} must be a power of two ≥ 4")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("domain length must be positive"));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let modes: Vec<i64> = (0..n as i64).map(|k| if k < n as i64 / 2 { k } else { k - n as i64 }).collect();
        let wavenumbers = modes
            .iter()
            .map(|&m| T::lit(2.0 * std::f64::consts::PI * m as f64 / length))
            .collect();
        let dealias = modes
            .iter()
            .map(|&m| if 3 * m.unsigned_abs() < n as u64 { T::one() } else { T::zero() })
            .collect();
        Ok(Spectral1d {
            n,
            forward,
            inverse,
            scratch: vec![Complex::default(); scratch_len],
            wavenumbers,
            dealias,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform (unnormalized).
    pub fn forward(&mut self, buf: &mut [Complex<T>]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// In-place inverse transform including the `1/n` factor.
    pub fn inverse(&mut self, buf: &mut [Complex<T>]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let s = T::one() / T::from_usize_lossy(self.n);
        for v in buf.iter_mut() {
            *v = *v * s;
        }
    }
}

/// Precomputed ETDRK4 coefficients for a fixed diagonal operator and step.
#[derive(Clone, Debug)]
pub struct Etdrk4<T> {
    pub h: T,
    e: Vec<Complex<T>>,
    e2: Vec<Complex<T>>,
    q: Vec<Complex<T>>,
    f1: Vec<Complex<T>>,
    f2: Vec<Complex<T>>,
    f3: Vec<Complex<T>>,
}

/// Work buffers for one ETDRK4 step.
#[derive(Clone, Debug)]
pub struct Etdrk4Work<T> {
    nv: Vec<Complex<T>>,
    na: Vec<Complex<T>>,
    nb: Vec<Complex<T>>,
    nc: Vec<Complex<T>>,
    a: Vec<Complex<T>>,
    b: Vec<Complex<T>>,
    c: Vec<Complex<T>>,
}

impl<T: Real> Etdrk4Work<T> {
    pub fn new(n: usize) -> Self {
        let z = vec![Complex::default(); n];
        Etdrk4Work {
            nv: z.clone(),
            na: z.clone(),
            nb: z.clone(),
            nc: z.clone(),
            a: z.clone(),
            b: z.clone(),
            c: z,
        }
    }
}

impl<T: Real> Etdrk4<T> {
    /// Coefficients for symbols `linear` and step `h`. The φ-functions are
    /// averaged over a circle of radius 1 around each `L̂h`, which keeps them
    /// accurate where the closed forms cancel catastrophically.
    pub fn new(linear: &[Complex<T>], h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("time step must be positive"));
        }
        let n = linear.len();
        let mut out = Etdrk4 {
            h: T::lit(h),
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        let roots: Vec<Complex<f64>> = (0..CONTOUR_POINTS)
            .map(|j| Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let cast = |z: Complex<f64>| Complex::new(T::lit(z.re), T::lit(z.im));
        for l in linear {
            let lh = Complex::new(l.re.to_f64_lossy() * h, l.im.to_f64_lossy() * h);
            out.e.push(cast(lh.exp()));
            out.e2.push(cast((lh * 0.5).exp()));
            let (mut q, mut f1, mut f2, mut f3) = (Complex::default(), Complex::default(), Complex::default(), Complex::default());
            for r in &roots {
                let z = lh + r;
                let ez = z.exp();
                let z3 = z * z * z;
                q += ((z * 0.5).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            let s = h / CONTOUR_POINTS as f64;
            out.q.push(cast(q * s));
            out.f1.push(cast(f1 * s));
            out.f2.push(cast(f2 * s));
            out.f3.push(cast(f3 * s));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    /// Advances `v` by one step. `nonlinear(v̂, out)` must write `N̂(v̂)`.
    #[allow(clippy::needless_range_loop)]
    pub fn step(&self, v: &mut [Complex<T>], w: &mut Etdrk4Work<T>, mut nonlinear: impl FnMut(&[Complex<T>], &mut [Complex<T>])) {
        let two = T::lit(2.0);
        nonlinear(v, &mut w.nv);
        for k in 0..v.len() {
            w.a[k] = self.e2[k] * v[k] + self.q[k] * w.nv[k];
        }
        nonlinear(&w.a, &mut w.na);
        for k in 0..v.len() {
            w.b[k] = self.e2[k] * v[k] + self.q[k] * w.na[k];
        }
        nonlinear(&w.b, &mut w.nb);
        for k in 0..v.len() {
            w.c[k] = self.e2[k] * w.a[k] + self.q[k] * (w.nb[k] * two - w.nv[k]);
        }
        nonlinear(&w.c, &mut w.nc);
        for k in 0..v.len() {
            v[k] = self.e[k] * v[k] + self.f1[k] * w.nv[k] + self.f2[k] * (w.na[k] + w.nb[k]) * two + self.f3[k] * w.nc[k];
        }
    }
}
