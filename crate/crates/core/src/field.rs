//! Multichannel time series sampled on a spatial grid.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{fmt17, parse_real};
use crate::Real;

/// How a physical field was mapped onto real input channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// `|ψ|` per grid point.
    Magnitude,
    /// Real parts in channels `[0, M/2)`, imaginary parts in `[M/2, M)`.
    RealImagSplit,
    /// A real field passed through unchanged.
    RealScalar,
}

impl Encoding {
    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::Magnitude => "magnitude",
            Encoding::RealImagSplit => "real_imag_split",
            Encoding::RealScalar => "real_scalar",
        }
    }
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Encoding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "magnitude" => Ok(Encoding::Magnitude),
            "real_imag_split" | "realimag" | "real_imag" => Ok(Encoding::RealImagSplit),
            "real_scalar" | "real" => Ok(Encoding::RealScalar),
            other => Err(Error::invalid(format!("unknown encoding '{other}'"))),
        }
    }
}

/// Everything about a series except its samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMeta {
    pub dt: f64,
    pub grid: Vec<f64>,
    pub encoding: Encoding,
    pub system_tag: String,
}

/// `M × T` channel-major real samples.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSeries<T> {
    data: DenseMatrix<T>,
    pub meta: SeriesMeta,
}

impl<T: Real> FieldSeries<T> {
    /// Wraps `data` (`channels × steps`) after checking the encoding invariants.
    pub fn new(data: DenseMatrix<T>, meta: SeriesMeta) -> Result<Self> {
        let s = FieldSeries { data, meta };
        s.validate()?;
        Ok(s)
    }

    pub fn from_columns(columns: &[Vec<T>], meta: SeriesMeta) -> Result<Self> {
        let m = match columns.first() {
            Some(c) => c.len(),
            None => meta_channels(&meta),
        };
        let mut data = DenseMatrix::zeros(m, columns.len());
        for (t, c) in columns.iter().enumerate() {
            if c.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "FieldSeries::from_columns",
                    expected: m,
                    actual: c.len(),
                });
            }
            data.set_column(t, c);
        }
        Self::new(data, meta)
    }

    pub fn empty(channels: usize, meta: SeriesMeta) -> Self {
        FieldSeries {
            data: DenseMatrix::zeros(channels, 0),
            meta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.data.is_finite() {
            return Err(Error::invalid("field series contains non-finite samples"));
        }
        match self.meta.encoding {
            Encoding::RealImagSplit if !self.channels().is_multiple_of(2) => Err(Error::invalid(format!(
                "real/imag split needs an even channel count, got {}",
                self.channels()
            ))),
            Encoding::Magnitude if self.data.as_slice().iter().any(|v| *v < T::zero()) => {
                Err(Error::invalid("magnitude series has negative samples"))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.data.rows()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dt(&self) -> f64 {
        self.meta.dt
    }

    pub fn data(&self) -> &DenseMatrix<T> {
        &self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, t: usize) -> T {
        self.data[(channel, t)]
    }

    pub fn column(&self, t: usize) -> Vec<T> {
        self.data.column(t)
    }

    pub fn column_into(&self, t: usize, out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.data[(i, t)];
        }
    }

    pub fn channel(&self, i: usize) -> &[T] {
        self.data.row(i)
    }

    /// Samples `range` as a new series sharing the metadata.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start > range.end || range.end > self.len() {
            return Err(Error::invalid(format!(
                "slice {range:?} out of bounds for series of length {}",
                self.len()
            )));
        }
        let data = DenseMatrix::from_fn(self.channels(), range.len(), |i, t| self.data[(i, range.start + t)]);
        Ok(FieldSeries {
            data,
            meta: self.meta.clone(),
        })
    }

    /// Root-mean-square over all samples.
    pub fn rms(&self) -> T {
        let n = self.data.as_slice().len();
        if n == 0 {
            return T::zero();
        }
        (self.data.as_slice().iter().map(|v| *v * *v).sum::<T>() / T::from_usize_lossy(n)).sqrt()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.data.map(f), self.meta.clone())
    }

    /// Writes the CSV exchange format: four `#` header lines, then one row per
    /// time sample with `M` comma-separated values in 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# system={}", self.meta.system_tag)?;
        writeln!(w, "# encoding={}", self.meta.encoding)?;
        writeln!(w, "# dt={}", fmt17(self.meta.dt))?;
        let grid: Vec<String> = self.meta.grid.iter().map(|g| fmt17(*g)).collect();
        writeln!(w, "# grid={}", grid.join(","))?;
        let mut line = String::new();
        for t in 0..self.len() {
            line.clear();
            for i in 0..self.channels() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&fmt17(self.data[(i, t)]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, path: Option<&Path>) -> Result<Self> {
        let mut tag = None;
        let mut encoding = None;
        let mut dt = None;
        let mut grid = None;
        let mut columns: Vec<Vec<T>> = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let Some((key, value)) = h.trim().split_once('=') else {
                    continue;
                };
                match key.trim() {
                    "system" => tag = Some(value.to_string()),
                    "encoding" => encoding = Some(value.parse::<Encoding>()?),
                    "dt" => {
                        dt = Some(
                            value
                                .trim()
                                .parse::<f64>()
                                .map_err(|e| Error::parse(path, k + 1, e.to_string()))?,
                        )
                    }
                    "grid" => {
                        let g: std::result::Result<Vec<f64>, _> = if value.trim().is_empty() {
                            Ok(Vec::new())
                        } else {
                            value.split(',').map(|v| v.trim().parse::<f64>()).collect()
                        };
                        grid = Some(g.map_err(|e| Error::parse(path, k + 1, e.to_string()))?);
                    }
                    _ => {}
                }
                continue;
            }
            let col: Option<Vec<T>> = line.split(',').map(parse_real::<T>).collect();
            let col = col.ok_or_else(|| Error::parse(path, k + 1, "non-numeric sample"))?;
            if let Some(first) = columns.first() {
                if first.len() != col.len() {
                    return Err(Error::parse(
                        path,
                        k + 1,
                        format!("expected {} values, found {}", first.len(), col.len()),
                    ));
                }
            }
            columns.push(col);
        }
        let meta = SeriesMeta {
            dt: dt.ok_or_else(|| Error::parse(path, 0, "missing '# dt=' header"))?,
            grid: grid.unwrap_or_default(),
            encoding: encoding.ok_or_else(|| Error::parse(path, 0, "missing '# encoding=' header"))?,
            system_tag: tag.unwrap_or_default(),
        };
        if columns.is_empty() {
            let m = meta_channels(&meta);
            return Ok(Self::empty(m, meta));
        }
        Self::from_columns(&columns, meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_csv(f, Some(path))
    }
}

fn meta_channels(meta: &SeriesMeta) -> usize {
    match meta.encoding {
        Encoding::RealImagSplit => 2 * meta.grid.len(),
        _ => meta.grid.len(),
    }
}
