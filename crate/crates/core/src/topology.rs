//! Reservoir network generation: random directed/undirected graphs and
//! Watts–Strogatz small-world rings, uniform edge weights, and rescaling to a
//! prescribed spectral radius.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, CsrMatrix, RadiusEstimate, RadiusMethod, RadiusOptions};
use crate::scalar::{fmt17, parse_real};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    DirectedRandom,
    UndirectedRandom,
    SmallWorld,
}

impl TopologyKind {
    pub fn is_directed(self) -> bool {
        matches!(self, TopologyKind::DirectedRandom)
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "directed_random" | "directed" => Ok(TopologyKind::DirectedRandom),
            "undirected_random" | "undirected" => Ok(TopologyKind::UndirectedRandom),
            "small_world" | "smallworld" => Ok(TopologyKind::SmallWorld),
            other => Err(Error::invalid(format!("unknown topology kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub n: usize,
    /// Mean degree `k`; must be an even integer for small-world rings.
    pub avg_degree: f64,
    #[serde(default)]
    pub rewire_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

impl TopologySpec {
    pub fn directed(n: usize, avg_degree: f64, seed: u64) -> Self {
        TopologySpec {
            kind: TopologyKind::DirectedRandom,
            n,
            avg_degree,
            rewire_prob: 0.0,
            seed,
        }
    }

    pub fn undirected(n: usize, avg_degree: f64, seed: u64) -> Self {
        TopologySpec {
            kind: TopologyKind::UndirectedRandom,
            ..Self::directed(n, avg_degree, seed)
        }
    }

    pub fn small_world(n: usize, avg_degree: usize, rewire_prob: f64, seed: u64) -> Self {
        TopologySpec {
            kind: TopologyKind::SmallWorld,
            n,
            avg_degree: avg_degree as f64,
            rewire_prob,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("topology needs at least one node"));
        }
        if !(self.avg_degree >= 0.0) || !self.avg_degree.is_finite() {
            return Err(Error::invalid(format!("average degree {} must be finite and >= 0", self.avg_degree)));
        }
        if (self.n as f64) < self.avg_degree + 1.0 {
            return Err(Error::invalid(format!(
                "degree {} is unrealizable with {} nodes",
                self.avg_degree, self.n
            )));
        }
        if self.kind == TopologyKind::SmallWorld {
            let k = self.avg_degree;
            if k.fract() != 0.0 || !(k as u64).is_multiple_of(2) {
                return Err(Error::invalid(format!("small-world degree must be an even integer, got {k}")));
            }
            if !(0.0..=1.0).contains(&self.rewire_prob) {
                return Err(Error::invalid(format!("rewire probability {} outside [0,1]", self.rewire_prob)));
            }
        }
        Ok(())
    }
}

/// Unweighted edge set. Undirected edges are stored once with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    pub n: usize,
    pub directed: bool,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of stored matrix entries once weighted.
    pub fn stored_entries(&self) -> usize {
        if self.directed {
            self.edges.len()
        } else {
            2 * self.edges.len()
        }
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(i, j) in &self.edges {
            d[i] += 1;
            if !self.directed {
                d[j] += 1;
            }
        }
        d
    }
}

pub fn generate_topology(spec: &TopologySpec) -> Result<EdgeSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let edges = match spec.kind {
        TopologyKind::DirectedRandom => {
            let p = if n > 1 { spec.avg_degree / (n - 1) as f64 } else { 0.0 };
            // candidate index c enumerates ordered pairs (i, j), j != i
            let total = (n * (n - 1)) as u64;
            sample_indices(&mut rng, total, p)
                .into_iter()
                .map(|c| {
                    let i = (c / (n as u64 - 1)) as usize;
                    let mut j = (c % (n as u64 - 1)) as usize;
                    if j >= i {
                        j += 1;
                    }
                    (i, j)
                })
                .collect()
        }
        TopologyKind::UndirectedRandom => {
            let p = if n > 1 { spec.avg_degree / (n - 1) as f64 } else { 0.0 };
            let total = (n as u64) * (n as u64 - 1) / 2;
            sample_indices(&mut rng, total, p)
                .into_iter()
                .map(|c| unrank_pair(c, n))
                .collect()
        }
        TopologyKind::SmallWorld => watts_strogatz(&mut rng, n, spec.avg_degree as usize, spec.rewire_prob),
    };
    Ok(EdgeSet {
        n,
        directed: spec.kind.is_directed(),
        edges,
    })
}

/// Bernoulli(p) selection over `0..total` by geometric gap sampling.
fn sample_indices<R: Rng>(rng: &mut R, total: u64, p: f64) -> Vec<u64> {
    let mut out = Vec::new();
    if total == 0 || p <= 0.0 {
        return out;
    }
    if p >= 1.0 {
        return (0..total).collect();
    }
    let log_q = (1.0 - p).ln();
    let mut c: i64 = -1;
    loop {
        let r: f64 = rng.gen();
        let gap = ((1.0 - r).ln() / log_q).floor();
        if !gap.is_finite() || gap >= (total as f64) {
            break;
        }
        c += 1 + gap as i64;
        if c as u64 >= total {
            break;
        }
        out.push(c as u64);
    }
    out
}

/// Maps `c` in `0..n(n-1)/2` onto the unordered pair `(i, j)`, `i < j`, row by row.
fn unrank_pair(mut c: u64, n: usize) -> (usize, usize) {
    let mut i = 0usize;
    loop {
        let row = (n - 1 - i) as u64;
        if c < row {
            return (i, i + 1 + c as usize);
        }
        c -= row;
        i += 1;
    }
}

fn watts_strogatz<R: Rng>(rng: &mut R, n: usize, k: usize, beta: f64) -> Vec<(usize, usize)> {
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut order = Vec::new();
    for j in 1..=k / 2 {
        for i in 0..n {
            let t = (i + j) % n;
            if adj[i].insert(t) {
                adj[t].insert(i);
                order.push((i, t));
            }
        }
    }
    if beta > 0.0 {
        for &(u, v) in &order {
            if !adj[u].contains(&v) {
                continue;
            }
            if rng.gen::<f64>() >= beta {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.gen_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| adj[i].iter().filter(move |&&j| i < j).map(move |&j| key(i, j)))
        .collect();
    edges.sort_unstable();
    edges
}

/// Draws one weight per edge uniformly from `[-1, 1]`; undirected edges get a
/// single draw stored in both triangles.
pub fn assign_weights<T: Real>(edges: &EdgeSet, seed: u64) -> CsrMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::with_capacity(edges.stored_entries());
    for &(i, j) in &edges.edges {
        let w = T::lit(rng.gen_range(-1.0..=1.0));
        trip.push((i, j, w));
        if !edges.directed {
            trip.push((j, i, w));
        }
    }
    CsrMatrix::from_triplets(edges.n, edges.n, trip).expect("edge sets are duplicate-free")
}

/// A weighted reservoir adjacency matrix with a recorded spectral radius.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirNetwork<T> {
    pub weights: CsrMatrix<T>,
    pub spectral_radius: T,
    pub spec: Option<TopologySpec>,
    /// How the pre-scaling radius was obtained.
    pub radius_method: RadiusMethod,
}

impl<T: Real> ReservoirNetwork<T> {
    /// Generates topology, draws weights and rescales to `rho`.
    pub fn build(spec: &TopologySpec, weight_seed: u64, rho: T) -> Result<Self> {
        let edges = generate_topology(spec)?;
        let raw = assign_weights::<T>(&edges, weight_seed);
        let mut net = scale_to_spectral_radius(&raw, rho)?;
        net.spec = Some(spec.clone());
        Ok(net)
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    /// Writes the `# n=`, `# rho=`, `i j w` edge-list format.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# n={}", self.n())?;
        writeln!(w, "# rho={}", fmt17(self.spectral_radius))?;
        for (i, j, v) in self.weights.triplets() {
            writeln!(w, "{i} {j} {}", fmt17(v))?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut n = None;
        let mut rho = None;
        let mut trip = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim();
                if let Some(v) = h.strip_prefix("n=") {
                    n = Some(v.trim().parse::<usize>().map_err(|e| Error::parse(None, lineno + 1, e.to_string()))?);
                } else if let Some(v) = h.strip_prefix("rho=") {
                    rho = Some(parse_real::<T>(v).ok_or_else(|| Error::parse(None, lineno + 1, "bad rho"))?);
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(Error::parse(None, lineno + 1, "expected 'i j w'"));
            };
            let i = i.parse::<usize>().map_err(|e| Error::parse(None, lineno + 1, e.to_string()))?;
            let j = j.parse::<usize>().map_err(|e| Error::parse(None, lineno + 1, e.to_string()))?;
            let v = parse_real::<T>(v).ok_or_else(|| Error::parse(None, lineno + 1, "bad weight"))?;
            trip.push((i, j, v));
        }
        let n = n.ok_or_else(|| Error::parse(None, 0, "missing '# n=' header"))?;
        let rho = rho.ok_or_else(|| Error::parse(None, 0, "missing '# rho=' header"))?;
        Ok(ReservoirNetwork {
            weights: CsrMatrix::from_triplets(n, n, trip)?,
            spectral_radius: rho,
            spec: None,
            radius_method: RadiusMethod::Trivial,
        })
    }
}

/// Multiplies `matrix` by `target / |λ_max(matrix)|`.
///
/// `target == 0` yields the zero matrix on the same sparsity pattern.
pub fn scale_to_spectral_radius<T: Real>(matrix: &CsrMatrix<T>, target: T) -> Result<ReservoirNetwork<T>> {
    scale_with_options(matrix, target, &RadiusOptions::default()).map(|(net, _)| net)
}

/// As [`scale_to_spectral_radius`], also returning the radius estimate of the input.
pub fn scale_with_options<T: Real>(
    matrix: &CsrMatrix<T>,
    target: T,
    opts: &RadiusOptions,
) -> Result<(ReservoirNetwork<T>, RadiusEstimate<T>)> {
    if !(target >= T::zero()) || !target.is_finite() {
        return Err(Error::invalid(format!("target spectral radius {target} must be finite and >= 0")));
    }
    if matrix.rows() != matrix.cols() {
        return Err(Error::DimensionMismatch {
            context: "scale_to_spectral_radius",
            expected: matrix.rows(),
            actual: matrix.cols(),
        });
    }
    if target == T::zero() {
        let est = RadiusEstimate {
            radius: T::zero(),
            method: RadiusMethod::Trivial,
            iterations: 0,
            relative_error: 0.0,
        };
        let net = ReservoirNetwork {
            weights: matrix.scaled(T::zero()),
            spectral_radius: T::zero(),
            spec: None,
            radius_method: RadiusMethod::Trivial,
        };
        return Ok((net, est));
    }
    let est = spectral_radius(matrix, opts)?;
    if est.radius < T::lit(1e-12) {
        return Err(Error::DegenerateSpectrum {
            radius: est.radius.to_f64_lossy(),
            target: target.to_f64_lossy(),
        });
    }
    let net = ReservoirNetwork {
        weights: matrix.scaled(target / est.radius),
        spectral_radius: target,
        spec: None,
        radius_method: est.method,
    };
    Ok((net, est))
}
