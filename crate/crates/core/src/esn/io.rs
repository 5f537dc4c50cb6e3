//! Plain-text model container.
//!
//! ```text
//! esn-valley-model 1
//! scalar f64
//! hyper n=<N> input_dim=<M> output_dim=<L> input_scale=<α> transient_steps=<S> ridge=<Γ> dt=<dt>
//! topology none | topology kind=<kind> n=<N> avg_degree=<k> rewire_prob=<p> seed=<seed>
//! input_map seed=<seed> nnz=<count>
//! <row> <col> <weight>            (count lines)
//! reservoir rho=<ρ> method=<method> nnz=<count>
//! <row> <col> <weight>            (count lines)
//! readout none | readout rows=<L> cols=<N>
//! <w_0> <w_1> ... <w_{N-1}>       (L lines)
//! meta none | meta dt=<dt> encoding=<enc> grid=<g0,g1,...> tag=<rest of line>
//! end
//! ```
//!
//! Every real number is written with 17 significant digits, so `f64` models
//! round-trip bit-exactly.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::esn::{EsnHyperParams, EsnModel, InputMap};
use crate::field::{Encoding, SeriesMeta};
use crate::linalg::{CsrMatrix, DenseMatrix, RadiusMethod};
use crate::scalar::{fmt17, parse_real};
use crate::topology::{ReservoirNetwork, TopologySpec};
use crate::Real;

const MAGIC: &str = "esn-valley-model 1";

fn method_name(m: RadiusMethod) -> &'static str {
    match m {
        RadiusMethod::Trivial => "trivial",
        RadiusMethod::SubspaceIteration => "subspace_iteration",
        RadiusMethod::DenseEigensolver => "dense",
    }
}

fn parse_method(s: &str) -> Option<RadiusMethod> {
    match s {
        "trivial" => Some(RadiusMethod::Trivial),
        "subspace_iteration" => Some(RadiusMethod::SubspaceIteration),
        "dense" => Some(RadiusMethod::DenseEigensolver),
        _ => None,
    }
}

impl<T: Real> EsnModel<T> {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let h = &self.hyper;
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "scalar {}", T::NAME)?;
        writeln!(
            w,
            "hyper n={} input_dim={} output_dim={} input_scale={} transient_steps={} ridge={} dt={}",
            h.n,
            h.input_dim,
            h.output_dim,
            fmt17(h.input_scale),
            h.transient_steps,
            fmt17(h.ridge),
            fmt17(h.dt)
        )?;
        match &self.reservoir.spec {
            None => writeln!(w, "topology none")?,
            Some(s) => writeln!(
                w,
                "topology kind={} n={} avg_degree={} rewire_prob={} seed={}",
                kind_name(s.kind),
                s.n,
                fmt17(s.avg_degree),
                fmt17(s.rewire_prob),
                s.seed
            )?,
        }
        writeln!(w, "input_map seed={} nnz={}", self.input_map.seed, self.input_map.weights.nnz())?;
        for (i, j, v) in self.input_map.weights.triplets() {
            writeln!(w, "{i} {j} {}", fmt17(v))?;
        }
        writeln!(
            w,
            "reservoir rho={} method={} nnz={}",
            fmt17(self.reservoir.spectral_radius),
            method_name(self.reservoir.radius_method),
            self.reservoir.weights.nnz()
        )?;
        for (i, j, v) in self.reservoir.weights.triplets() {
            writeln!(w, "{i} {j} {}", fmt17(v))?;
        }
        match &self.readout {
            None => writeln!(w, "readout none")?,
            Some(ro) => {
                writeln!(w, "readout rows={} cols={}", ro.rows(), ro.cols())?;
                for i in 0..ro.rows() {
                    let row: Vec<String> = ro.row(i).iter().map(|v| fmt17(*v)).collect();
                    writeln!(w, "{}", row.join(" "))?;
                }
            }
        }
        match &self.meta {
            None => writeln!(w, "meta none")?,
            Some(m) => {
                let grid: Vec<String> = m.grid.iter().map(|g| fmt17(*g)).collect();
                writeln!(
                    w,
                    "meta dt={} encoding={} grid={} tag={}",
                    fmt17(m.dt),
                    m.encoding,
                    grid.join(","),
                    m.system_tag
                )?;
            }
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R, path: Option<&Path>) -> Result<Self> {
        let mut lines = r.lines().enumerate().map(|(k, l)| (k + 1, l));
        let mut next = || -> Result<(usize, String)> {
            match lines.next() {
                Some((k, Ok(l))) => Ok((k, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::parse(path, 0, "unexpected end of model file")),
            }
        };
        let (k, l) = next()?;
        if l.trim() != MAGIC {
            return Err(Error::parse(path, k, "not an esn-valley model file"));
        }
        let (k, l) = next()?;
        if l.trim() != format!("scalar {}", T::NAME) {
            return Err(Error::parse(path, k, format!("expected 'scalar {}', found '{}'", T::NAME, l.trim())));
        }

        let (k, l) = next()?;
        let kv = fields(&l, "hyper", path, k)?;
        let hyper = EsnHyperParams {
            n: get(&kv, "n", path, k)?,
            input_dim: get(&kv, "input_dim", path, k)?,
            output_dim: get(&kv, "output_dim", path, k)?,
            input_scale: get(&kv, "input_scale", path, k)?,
            transient_steps: get(&kv, "transient_steps", path, k)?,
            ridge: get(&kv, "ridge", path, k)?,
            dt: get(&kv, "dt", path, k)?,
        };
        hyper.validate()?;

        let (k, l) = next()?;
        let topo = if l.trim() == "topology none" {
            None
        } else {
            let kv = fields(&l, "topology", path, k)?;
            Some(TopologySpec {
                kind: get::<String>(&kv, "kind", path, k)?.parse()?,
                n: get(&kv, "n", path, k)?,
                avg_degree: get(&kv, "avg_degree", path, k)?,
                rewire_prob: get(&kv, "rewire_prob", path, k)?,
                seed: get(&kv, "seed", path, k)?,
            })
        };

        let (k, l) = next()?;
        let kv = fields(&l, "input_map", path, k)?;
        let in_seed: u64 = get(&kv, "seed", path, k)?;
        let nnz: usize = get(&kv, "nnz", path, k)?;
        let mut trip = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (k, l) = next()?;
            trip.push(triplet::<T>(&l, path, k)?);
        }
        let input_map = InputMap {
            weights: CsrMatrix::from_triplets(hyper.n, hyper.input_dim, trip)?,
            seed: in_seed,
        };

        let (k, l) = next()?;
        let kv = fields(&l, "reservoir", path, k)?;
        let rho: T = get_real(&kv, "rho", path, k)?;
        let method = parse_method(&get::<String>(&kv, "method", path, k)?)
            .ok_or_else(|| Error::parse(path, k, "unknown radius method"))?;
        let nnz: usize = get(&kv, "nnz", path, k)?;
        let mut trip = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (k, l) = next()?;
            trip.push(triplet::<T>(&l, path, k)?);
        }
        let reservoir = ReservoirNetwork {
            weights: CsrMatrix::from_triplets(hyper.n, hyper.n, trip)?,
            spectral_radius: rho,
            spec: topo,
            radius_method: method,
        };

        let (k, l) = next()?;
        let readout = if l.trim() == "readout none" {
            None
        } else {
            let kv = fields(&l, "readout", path, k)?;
            let rows: usize = get(&kv, "rows", path, k)?;
            let cols: usize = get(&kv, "cols", path, k)?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (k, l) = next()?;
                let row: Option<Vec<T>> = l.split_whitespace().map(parse_real::<T>).collect();
                let row = row.ok_or_else(|| Error::parse(path, k, "bad readout value"))?;
                if row.len() != cols {
                    return Err(Error::parse(path, k, format!("expected {cols} readout values")));
                }
                data.extend(row);
            }
            Some(DenseMatrix::from_vec(rows, cols, data)?)
        };

        let (k, l) = next()?;
        let meta = if l.trim() == "meta none" {
            None
        } else {
            let body = l
                .trim_start()
                .strip_prefix("meta ")
                .ok_or_else(|| Error::parse(path, k, "expected 'meta'"))?;
            let (head, tag) = match body.split_once("tag=") {
                Some((h, t)) => (h, t.to_string()),
                None => (body, String::new()),
            };
            let kv = fields(&format!("meta {head}"), "meta", path, k)?;
            let grid_s: String = kv.get("grid").cloned().unwrap_or_default();
            let grid: std::result::Result<Vec<f64>, _> = if grid_s.is_empty() {
                Ok(Vec::new())
            } else {
                grid_s.split(',').map(|g| g.parse::<f64>()).collect()
            };
            Some(SeriesMeta {
                dt: get(&kv, "dt", path, k)?,
                encoding: get::<String>(&kv, "encoding", path, k)?.parse::<Encoding>()?,
                grid: grid.map_err(|e| Error::parse(path, k, e.to_string()))?,
                system_tag: tag,
            })
        };
        let (k, l) = next()?;
        if l.trim() != "end" {
            return Err(Error::parse(path, k, "expected 'end'"));
        }

        let mut model = EsnModel::new(hyper, input_map, reservoir)?;
        model.readout = readout;
        model.meta = meta;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(f, Some(path))
    }
}

fn kind_name(k: crate::topology::TopologyKind) -> &'static str {
    use crate::topology::TopologyKind::*;
    match k {
        DirectedRandom => "directed_random",
        UndirectedRandom => "undirected_random",
        SmallWorld => "small_world",
    }
}

fn fields(line: &str, head: &str, path: Option<&Path>, k: usize) -> Result<HashMap<String, String>> {
    let mut it = line.split_whitespace();
    if it.next() != Some(head) {
        return Err(Error::parse(path, k, format!("expected '{head}' record")));
    }
    it.map(|tok| {
        tok.split_once('=')
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .ok_or_else(|| Error::parse(path, k, format!("malformed field '{tok}'")))
    })
    .collect()
}

fn get<V: std::str::FromStr>(kv: &HashMap<String, String>, key: &str, path: Option<&Path>, k: usize) -> Result<V> {
    kv.get(key)
        .ok_or_else(|| Error::parse(path, k, format!("missing '{key}'")))?
        .parse::<V>()
        .map_err(|_| Error::parse(path, k, format!("bad value for '{key}'")))
}

fn get_real<T: Real>(kv: &HashMap<String, String>, key: &str, path: Option<&Path>, k: usize) -> Result<T> {
    kv.get(key)
        .and_then(|s| parse_real::<T>(s))
        .ok_or_else(|| Error::parse(path, k, format!("bad or missing '{key}'")))
}

fn triplet<T: Real>(line: &str, path: Option<&Path>, k: usize) -> Result<(usize, usize, T)> {
    let mut it = line.split_whitespace();
    let (Some(i), Some(j), Some(v)) = (it.next(), it.next(), it.next()) else {
        return Err(Error::parse(path, k, "expected 'row col weight'"));
    };
    let i = i.parse().map_err(|_| Error::parse(path, k, "bad row index"))?;
    let j = j.parse().map_err(|_| Error::parse(path, k, "bad column index"))?;
    let v = parse_real::<T>(v).ok_or_else(|| Error::parse(path, k, "bad weight"))?;
    Ok((i, j, v))
}
