//! Floating-point scalar abstraction.
//!
//! Every numeric routine in the crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. The crate root re-exports `f64`
//! specialisations (`Network64`, `Model64`, ...) for callers that do not care.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Tag written into serialized files.
    const NAME: &'static str;

    /// `c += alpha * a * b` for strided row/column layouts.
    ///
    /// # Safety
    /// Pointers and strides must describe valid `m×k`, `k×n`, `m×n` views.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    /// Convergence floor tied to the type's precision: `max(requested, 64·ε)`.
    #[inline]
    fn tol(requested: f64) -> Self {
        Self::lit(requested).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Formats a value with 17 significant digits, which round-trips `f64` exactly.
pub fn fmt17<T: Real>(v: T) -> String {
    format!("{:.16e}", v)
}

/// Parses a scalar written by [`fmt17`] (or any decimal literal).
pub fn parse_real<T: Real>(s: &str) -> Option<T> {
    s.trim().parse::<T>().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips_f64() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt17(v);
            assert_eq!(parse_real::<f64>(&s).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn fmt17_round_trips_f32() {
        let v = 0.1f32;
        assert_eq!(parse_real::<f32>(&fmt17(v)).unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn tol_respects_precision() {
        assert_eq!(<f64 as Real>::tol(1e-8), 1e-8);
        assert!(<f32 as Real>::tol(1e-8) > 1e-6);
    }
}
