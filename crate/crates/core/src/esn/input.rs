use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::Real;

/// Input-to-reservoir map `W_IR` (`N × M`).
///
/// Rows are split into `M` contiguous blocks of `N/M` rows; every row of block
/// `j` has exactly one nonzero, in column `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputMap<T> {
    pub weights: CsrMatrix<T>,
    pub seed: u64,
}

impl<T: Real> InputMap<T> {
    pub fn generate(n: usize, inputs: usize, scale: T, seed: u64) -> Result<Self> {
        if inputs == 0 || !n.is_multiple_of(inputs) {
            return Err(Error::invalid(format!("{n} neurons cannot be split evenly over {inputs} inputs")));
        }
        let block = n / inputs;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = scale.to_f64_lossy();
        let trip = (0..n)
            .map(|row| {
                let w: f64 = rng.gen_range(-1.0..=1.0);
                (row, row / block, T::lit(w * s))
            })
            .collect();
        Ok(InputMap {
            weights: CsrMatrix::from_triplets(n, inputs, trip)?,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    /// Checks the one-nonzero-per-row block layout.
    pub fn check_structure(&self) -> bool {
        let (n, m) = (self.n(), self.inputs());
        if m == 0 || n % m != 0 {
            return false;
        }
        let block = n / m;
        (0..n).all(|r| {
            let (idx, _) = self.weights.row(r);
            idx.len() <= 1 && idx.iter().all(|&c| c == r / block)
        })
    }
}
