//! Spectral-radius estimation for sparse reservoir matrices.
//!
//! The estimator is block power iteration (subspace iteration) with a
//! Rayleigh–Ritz projection each sweep: a block of random start vectors is
//! pushed through the matrix, re-orthonormalised, and the largest-modulus
//! eigenvalue of the projected `p×p` matrix is taken as the estimate. Unlike a
//! single-vector power iteration this does not oscillate when the dominant
//! eigenvalues form a complex-conjugate pair or a `±λ` pair, both of which are
//! common for random non-symmetric and bipartite-like matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadiusMethod {
    /// Matrix has no stored nonzeros.
    Trivial,
    SubspaceIteration,
    /// Full dense eigen-decomposition; only used when iteration stalls on a small matrix.
    DenseEigensolver,
}

#[derive(Clone, Debug)]
pub struct RadiusOptions {
    /// Number of simultaneously iterated start vectors.
    pub block: usize,
    pub max_iterations: usize,
    /// Relative accuracy that must be reached for the estimate to be accepted.
    pub tolerance: f64,
    /// Iteration keeps going until this accuracy (or the budget) is reached.
    pub target_tolerance: f64,
    /// Largest dimension for which a dense eigensolver is used as fallback.
    pub dense_fallback_max_n: usize,
    pub seed: u64,
}

impl Default for RadiusOptions {
    fn default() -> Self {
        RadiusOptions {
            block: 8,
            max_iterations: 50_000,
            tolerance: 1e-8,
            target_tolerance: 1e-14,
            dense_fallback_max_n: 512,
            seed: 0x5e_ed0f_ca1e,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusEstimate<T> {
    pub radius: T,
    pub method: RadiusMethod,
    pub iterations: usize,
    /// Extrapolated relative error of `radius` at termination.
    pub relative_error: f64,
}

/// Largest eigenvalue modulus of a square sparse matrix.
pub fn spectral_radius<T: Real>(a: &CsrMatrix<T>, opts: &RadiusOptions) -> Result<RadiusEstimate<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "spectral_radius",
            expected: n,
            actual: a.cols(),
        });
    }
    if n == 0 || a.nnz() == 0 {
        return Ok(RadiusEstimate {
            radius: T::zero(),
            method: RadiusMethod::Trivial,
            iterations: 0,
            relative_error: 0.0,
        });
    }
    match subspace_iteration(a, opts) {
        Ok(est) => Ok(est),
        Err(Error::NotConverged { .. }) if n <= opts.dense_fallback_max_n => Ok(RadiusEstimate {
            radius: dense_spectral_radius(a),
            method: RadiusMethod::DenseEigensolver,
            iterations: 0,
            relative_error: 0.0,
        }),
        Err(e) => Err(e),
    }
}

/// Spectral radius via a full dense eigen-decomposition (O(n³)).
pub fn dense_spectral_radius<T: Real>(a: &CsrMatrix<T>) -> T {
    let n = a.rows();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in a.triplets() {
        m[(i, j)] = v.to_f64_lossy();
    }
    let r = m
        .complex_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.norm()));
    T::lit(r)
}

fn subspace_iteration<T: Real>(a: &CsrMatrix<T>, opts: &RadiusOptions) -> Result<RadiusEstimate<T>> {
    let n = a.rows();
    let p = opts.block.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<Vec<T>> = (0..p).map(|_| random_vec(&mut rng, n)).collect();
    orthonormalize(&mut q, &mut rng);
    let mut z: Vec<Vec<T>> = vec![vec![T::zero(); n]; p];

    let tol = opts.tolerance.max(64.0 * T::epsilon().to_f64_lossy());
    let tight = opts.target_tolerance.max(4.0 * T::epsilon().to_f64_lossy());
    let mut history: Vec<f64> = Vec::new();
    let mut changes: Vec<f64> = Vec::new();
    let mut last_err = f64::INFINITY;
    let collapse = a.max_abs().to_f64_lossy() * (n as f64).sqrt() * T::epsilon().to_f64_lossy();

    for it in 1..=opts.max_iterations {
        for (qj, zj) in q.iter().zip(z.iter_mut()) {
            a.matvec_into(qj, zj);
        }
        // A^k annihilated a random block: no nonzero eigenvalue is reachable.
        let largest = z.iter().map(|c| dot(c, c).sqrt().to_f64_lossy()).fold(0.0, f64::max);
        if largest <= collapse {
            return Ok(RadiusEstimate {
                radius: T::zero(),
                method: RadiusMethod::SubspaceIteration,
                iterations: it,
                relative_error: 0.0,
            });
        }
        let mut h = DMatrix::<f64>::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                h[(i, j)] = dot(&q[i], &z[j]).to_f64_lossy();
            }
        }
        let theta = ritz_radius(&h);

        if let Some(prev) = history.last() {
            let change = if theta > 0.0 { (theta - prev).abs() / theta } else { 0.0 };
            changes.push(change);
            last_err = extrapolated_error(&changes);
            let at_roundoff = changes.len() >= 3
                && changes[changes.len() - 3..].iter().all(|d| *d <= 16.0 * T::epsilon().to_f64_lossy());
            if (last_err <= tight || at_roundoff) && changes.len() >= 2 {
                return Ok(RadiusEstimate {
                    radius: T::lit(theta),
                    method: RadiusMethod::SubspaceIteration,
                    iterations: it,
                    relative_error: last_err.min(tol),
                });
            }
        }
        history.push(theta);

        std::mem::swap(&mut q, &mut z);
        orthonormalize(&mut q, &mut rng);
    }

    let theta = *history.last().unwrap_or(&0.0);
    if last_err <= tol {
        Ok(RadiusEstimate {
            radius: T::lit(theta),
            method: RadiusMethod::SubspaceIteration,
            iterations: opts.max_iterations,
            relative_error: last_err,
        })
    } else {
        Err(Error::NotConverged {
            iterations: opts.max_iterations,
            change: last_err,
        })
    }
}

/// Geometric extrapolation of the remaining error from recent relative changes.
fn extrapolated_error(changes: &[f64]) -> f64 {
    let k = changes.len();
    let d = changes[k - 1];
    if d == 0.0 {
        return 0.0;
    }
    if k < 3 {
        return f64::INFINITY;
    }
    let w = (k - 1).min(5);
    let old = changes[k - 1 - w];
    if old <= 0.0 {
        return f64::INFINITY;
    }
    let c = (d / old).powf(1.0 / w as f64);
    if c >= 1.0 {
        f64::INFINITY
    } else {
        d * c / (1.0 - c)
    }
}

fn ritz_radius(h: &DMatrix<f64>) -> f64 {
    if h.nrows() == 1 {
        return h[(0, 0)].abs();
    }
    if !h.iter().all(|v| v.is_finite()) {
        return f64::NAN;
    }
    h.complex_eigenvalues().iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

fn random_vec<T: Real, R: Rng>(rng: &mut R, n: usize) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect()
}

/// Modified Gram–Schmidt with one re-orthogonalisation pass; collapsed
/// columns are replaced by fresh random directions.
fn orthonormalize<T: Real, R: Rng>(q: &mut [Vec<T>], rng: &mut R) {
    let n = q.first().map_or(0, Vec::len);
    for j in 0..q.len() {
        let mut attempts = 0;
        loop {
            let before = dot(&q[j], &q[j]).sqrt();
            for _pass in 0..2 {
                for i in 0..j {
                    let (done, rest) = q.split_at_mut(j);
                    let c = dot(&done[i], &rest[0]);
                    for (x, y) in rest[0].iter_mut().zip(&done[i]) {
                        *x = *x - c * *y;
                    }
                }
            }
            let after = dot(&q[j], &q[j]).sqrt();
            if after > T::lit(1e-10) * before && after > T::min_positive_value() {
                for x in q[j].iter_mut() {
                    *x = *x / after;
                }
                break;
            }
            attempts += 1;
            assert!(attempts < 100, "cannot complete an orthonormal basis");
            q[j] = random_vec(rng, n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn csr(rows: &[Vec<f64>]) -> CsrMatrix<f64> {
        CsrMatrix::from_dense(&DenseMatrix::from_rows(rows))
    }

    #[test]
    fn diagonal() {
        let est = spectral_radius(&csr(&[vec![2.0, 0.0], vec![0.0, 1.0]]), &RadiusOptions::default()).unwrap();
        assert!((est.radius - 2.0).abs() < 1e-13);
    }

    #[test]
    fn plus_minus_pair() {
        // eigenvalues ±1; plain power iteration would oscillate
        let est = spectral_radius(&csr(&[vec![0.0, 2.0], vec![0.5, 0.0]]), &RadiusOptions::default()).unwrap();
        assert!((est.radius - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rotation_block_larger_than_subspace() {
        // 12x12 block-diagonal: dominant complex pair 1.5·e^{±iπ/3} plus decoys
        let n = 12;
        let mut trip = Vec::new();
        let (c, s) = (1.5 * (std::f64::consts::PI / 3.0).cos(), 1.5 * (std::f64::consts::PI / 3.0).sin());
        trip.extend([(0, 0, c), (0, 1, -s), (1, 0, s), (1, 1, c)]);
        for i in 2..n {
            trip.push((i, i, 1.0 - 0.05 * i as f64));
        }
        let m = CsrMatrix::from_triplets(n, n, trip).unwrap();
        let opts = RadiusOptions { block: 4, ..Default::default() };
        let est = spectral_radius(&m, &opts).unwrap();
        assert_eq!(est.method, RadiusMethod::SubspaceIteration);
        assert!((est.radius - 1.5).abs() < 1e-12, "{}", est.radius);
    }

    #[test]
    fn nilpotent_has_zero_radius() {
        let m = csr(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]]);
        let est = spectral_radius(&m, &RadiusOptions { block: 1, ..Default::default() }).unwrap();
        assert!(est.radius.abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_is_trivial() {
        let est = spectral_radius(&CsrMatrix::<f64>::zeros(5, 5), &RadiusOptions::default()).unwrap();
        assert_eq!(est.method, RadiusMethod::Trivial);
        assert_eq!(est.radius, 0.0);
    }

    #[test]
    fn extrapolation_needs_contraction() {
        assert!(extrapolated_error(&[1e-3, 1e-3, 1e-3]).is_infinite());
        let e = extrapolated_error(&[1e-2, 5e-3, 2.5e-3]);
        assert!((e - 2.5e-3).abs() < 1e-12);
    }
}
