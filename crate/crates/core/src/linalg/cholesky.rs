use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::Real;

/// Lower-triangular Cholesky factor `A = L·Lᵀ` of a symmetric positive-definite matrix.
#[derive(Clone)]
pub struct Cholesky<T> {
    l: DenseMatrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors `a`, reading only its lower triangle.
    ///
    /// A pivot at or below `n·ε·max(diag)` is reported as [`Error::Singular`]
    /// instead of being nudged.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                context: "Cholesky::factor",
                expected: n,
                actual: a.cols(),
            });
        }
        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
        let floor = T::epsilon() * T::from_usize_lossy(n.max(1)) * max_diag;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let row_j = l.row_mut(j);
            let s = dot(&row_j[..j], &row_j[..j]);
            let d = a[(j, j)] - s;
            if !(d > floor) {
                return Err(Error::Singular {
                    row: j,
                    pivot: d.to_f64().unwrap_or(f64::NAN),
                });
            }
            let djj = d.sqrt();
            row_j[j] = djj;
            for i in (j + 1)..n {
                let (upper, lower) = l.as_mut_slice().split_at_mut(i * n);
                let lj = &upper[j * n..j * n + j];
                let li = &mut lower[..n];
                let s = dot(&li[..j], lj);
                li[j] = (a[(i, j)] - s) / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor_matrix(&self) -> &DenseMatrix<T> {
        &self.l
    }

    /// Solves `A·X = B` in place for `B` stored row-major as `n × m`.
    pub fn solve_in_place(&self, b: &mut DenseMatrix<T>) -> Result<()> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                context: "Cholesky::solve",
                expected: n,
                actual: b.rows(),
            });
        }
        let m = b.cols();
        let mut acc = vec![T::zero(); m];
        // L·Y = B
        for i in 0..n {
            acc.copy_from_slice(b.row(i));
            let li = self.l.row(i);
            for (k, lik) in li[..i].iter().enumerate() {
                let yk = b.row(k);
                for (a, y) in acc.iter_mut().zip(yk) {
                    *a = *a - *lik * *y;
                }
            }
            let d = li[i];
            for (dst, a) in b.row_mut(i).iter_mut().zip(&acc) {
                *dst = *a / d;
            }
        }
        // Lᵀ·X = Y
        for i in (0..n).rev() {
            let d = self.l[(i, i)];
            for v in b.row_mut(i) {
                *v = *v / d;
            }
            let xi: Vec<T> = b.row(i).to_vec();
            for k in 0..i {
                let lik = self.l[(i, k)];
                if lik != T::zero() {
                    for (dst, x) in b.row_mut(k).iter_mut().zip(&xi) {
                        *dst = *dst - lik * *x;
                    }
                }
            }
        }
        Ok(())
    }
}
