use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{Encoding, FieldSeries, SeriesMeta};
use crate::linalg::DenseMatrix;
use crate::Real;

/// Raw field samples before channel encoding: `samples[t][i]` is the value at
/// grid point `i` and time index `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField<S> {
    pub samples: Vec<Vec<S>>,
    pub dt: f64,
    pub grid: Vec<f64>,
    pub system_tag: String,
}

impl<S: Copy> SampledField<S> {
    pub fn steps(&self) -> usize {
        self.samples.len()
    }

    pub fn points(&self) -> usize {
        self.grid.len()
    }

    pub fn at(&self, t: usize, i: usize) -> S {
        self.samples[t][i]
    }
}

/// Scalar types a field can be sampled in.
pub trait FieldValue<T: Real>: Copy {
    const IS_COMPLEX: bool;
    fn re(self) -> T;
    fn im(self) -> T;
    fn modulus(self) -> T;
}

impl<T: Real> FieldValue<T> for T {
    const IS_COMPLEX: bool = false;
    fn re(self) -> T {
        self
    }
    fn im(self) -> T {
        T::zero()
    }
    fn modulus(self) -> T {
        self.abs()
    }
}

impl<T: Real> FieldValue<T> for Complex<T> {
    const IS_COMPLEX: bool = true;
    fn re(self) -> T {
        self.re
    }
    fn im(self) -> T {
        self.im
    }
    fn modulus(self) -> T {
        self.norm()
    }
}

/// Maps a raw field onto real reservoir channels.
///
/// * `Magnitude`: `|ψ|` per grid point (`M = points`).
/// * `RealImagSplit`: real parts then imaginary parts (`M = 2·points`); complex fields only.
/// * `RealScalar`: identity for real fields; for complex fields only valid if
///   every imaginary part is exactly zero.
pub fn encode<T: Real, S: FieldValue<T>>(field: &SampledField<S>, encoding: Encoding) -> Result<FieldSeries<T>> {
    let p = field.points();
    let steps = field.steps();
    let channels = match encoding {
        Encoding::RealImagSplit => {
            if !S::IS_COMPLEX {
                return Err(Error::invalid("real/imag split requested for a real field"));
            }
            2 * p
        }
        _ => p,
    };
    let mut data = DenseMatrix::zeros(channels, steps);
    for (t, col) in field.samples.iter().enumerate() {
        if col.len() != p {
            return Err(Error::DimensionMismatch {
                context: "encode (grid points)",
                expected: p,
                actual: col.len(),
            });
        }
        for (i, v) in col.iter().enumerate() {
            match encoding {
                Encoding::Magnitude => data[(i, t)] = v.modulus(),
                Encoding::RealScalar => {
                    if v.im() != T::zero() {
                        return Err(Error::invalid("real scalar encoding of a field with imaginary parts"));
                    }
                    data[(i, t)] = v.re();
                }
                Encoding::RealImagSplit => {
                    data[(i, t)] = v.re();
                    data[(p + i, t)] = v.im();
                }
            }
        }
    }
    FieldSeries::new(
        data,
        SeriesMeta {
            dt: field.dt,
            grid: field.grid.clone(),
            encoding,
            system_tag: field.system_tag.clone(),
        },
    )
}
