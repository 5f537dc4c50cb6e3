//! Ridge-regression readout.
//!
//! Solves `W_RO = V·R'ᵀ·(R'·R'ᵀ + Γ·I)⁻¹` through a Cholesky solve of the
//! regularised Gram system. The Gram matrix and the cross term `R'·Vᵀ` are
//! accumulated in fixed-size chunks with a GEMM kernel, so the full state
//! matrix never has to be materialised and the summation order does not
//! depend on anything but the sample order.

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::Real;

const CHUNK: usize = 256;

#[derive(Clone, Debug)]
pub struct RidgeAccumulator<T> {
    n: usize,
    outputs: usize,
    gram: DenseMatrix<T>,
    cross: DenseMatrix<T>,
    // time-major staging buffers, CHUNK × n and CHUNK × outputs
    xs: Vec<T>,
    ys: Vec<T>,
    filled: usize,
    samples: usize,
}

impl<T: Real> RidgeAccumulator<T> {
    pub fn new(n: usize, outputs: usize) -> Self {
        RidgeAccumulator {
            n,
            outputs,
            gram: DenseMatrix::zeros(n, n),
            cross: DenseMatrix::zeros(n, outputs),
            xs: vec![T::zero(); CHUNK * n],
            ys: vec![T::zero(); CHUNK * outputs],
            filled: 0,
            samples: 0,
        }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Adds one normalised state `r'` with its target `v`.
    pub fn push(&mut self, state: &[T], target: &[T]) {
        debug_assert_eq!(state.len(), self.n);
        debug_assert_eq!(target.len(), self.outputs);
        let k = self.filled;
        self.xs[k * self.n..(k + 1) * self.n].copy_from_slice(state);
        self.ys[k * self.outputs..(k + 1) * self.outputs].copy_from_slice(target);
        self.filled += 1;
        self.samples += 1;
        if self.filled == CHUNK {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let k = self.filled;
        if k == 0 {
            return;
        }
        let n = self.n;
        let l = self.outputs;
        // SAFETY: xs is k×n and ys is k×l row-major; Xᵀ is addressed with
        // (row stride 1, column stride n). gram is n×n, cross is n×l.
        unsafe {
            T::gemm(
                n,
                k,
                n,
                T::one(),
                self.xs.as_ptr(),
                1,
                n as isize,
                self.xs.as_ptr(),
                n as isize,
                1,
                T::one(),
                self.gram.as_mut_slice().as_mut_ptr(),
                n as isize,
                1,
            );
            if l > 0 {
                T::gemm(
                    n,
                    k,
                    l,
                    T::one(),
                    self.xs.as_ptr(),
                    1,
                    n as isize,
                    self.ys.as_ptr(),
                    l as isize,
                    1,
                    T::one(),
                    self.cross.as_mut_slice().as_mut_ptr(),
                    l as isize,
                    1,
                );
            }
        }
        self.filled = 0;
    }

    /// Gram matrix `R'·R'ᵀ` and cross term `R'·Vᵀ` accumulated so far.
    pub fn moments(&mut self) -> (&DenseMatrix<T>, &DenseMatrix<T>) {
        self.flush();
        (&self.gram, &self.cross)
    }

    /// Readout `W_RO` (`L × N`).
    pub fn solve(mut self, ridge: T) -> Result<DenseMatrix<T>> {
        if self.samples == 0 {
            return Err(Error::EmptySeries);
        }
        self.flush();
        let mut a = self.gram;
        for i in 0..self.n {
            a[(i, i)] = a[(i, i)] + ridge;
        }
        let chol = Cholesky::factor(&a)?;
        let mut rhs = self.cross;
        chol.solve_in_place(&mut rhs)?;
        Ok(rhs.transpose())
    }
}

/// Fits `W_RO` from an `N × T` state matrix and `L × T` targets, ignoring the
/// first `discard` columns of both.
pub fn train_readout<T: Real>(
    states: &DenseMatrix<T>,
    targets: &DenseMatrix<T>,
    ridge: T,
    discard: usize,
) -> Result<DenseMatrix<T>> {
    let t = states.cols();
    if targets.cols() != t {
        return Err(Error::DimensionMismatch {
            context: "train_readout (time steps)",
            expected: t,
            actual: targets.cols(),
        });
    }
    if t <= discard {
        return Err(Error::invalid(format!("{t} training steps do not exceed the {discard} discarded")));
    }
    if !(ridge >= T::zero()) {
        return Err(Error::invalid("ridge parameter must be >= 0"));
    }
    let mut acc = RidgeAccumulator::new(states.rows(), targets.rows());
    let mut r = vec![T::zero(); states.rows()];
    let mut v = vec![T::zero(); targets.rows()];
    for c in discard..t {
        for (i, x) in r.iter_mut().enumerate() {
            *x = states[(i, c)];
        }
        for (i, x) in v.iter_mut().enumerate() {
            *x = targets[(i, c)];
        }
        acc.push(&r, &v);
    }
    acc.solve(ridge)
}
