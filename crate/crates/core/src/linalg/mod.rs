//! Small dense/sparse linear-algebra kernels used by the reservoir and the
//! readout solver.

mod cholesky;
mod dense;
mod sparse;
mod spectral;

pub use cholesky::Cholesky;
pub use dense::DenseMatrix;
pub use sparse::CsrMatrix;
pub use spectral::{dense_spectral_radius, spectral_radius, RadiusEstimate, RadiusMethod, RadiusOptions};

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot<T: crate::Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let ra = ca.remainder();
    let rb = cb.remainder();
    for (x, y) in ca.zip(cb) {
        acc[0] = acc[0] + x[0] * y[0];
        acc[1] = acc[1] + x[1] * y[1];
        acc[2] = acc[2] + x[2] * y[2];
        acc[3] = acc[3] + x[3] * y[3];
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail = tail + *x * *y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn norm2<T: crate::Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
