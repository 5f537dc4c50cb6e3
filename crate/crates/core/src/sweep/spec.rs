//! Declarative sweep configuration, read from TOML.
//!
//! ```toml
//! [system]
//! kind = "kse"                 # akhmediev | kuznetsov_ma | collision | kse | cgle
//! encoding = "real_scalar"     # optional: magnitude | real_imag_split | real_scalar
//!
//! [kse]                        # optional; only the table matching `kind` is read
//! seed = 1                     # any KseParams field
//!
//! [esn]
//! n = 1024
//! input_scale = 1.0
//! transient_steps = 10
//! ridge = 1e-4
//!
//! [topology]
//! kind = "directed_random"     # directed_random | undirected_random | small_world
//! avg_degree = 3.0
//! rewire_prob = 0.0
//!
//! [sweep]
//! rho_grid = [0.01, 0.1, 1.0]  # optional; strictly ascending
//! ensemble_size = 20
//! train_steps = 20000
//! horizon = 400
//! start_mode = "warm"          # warm | cold
//! warmup_steps = 100           # cold start only
//! master_seed = 0
//! threshold = 0.5
//! valley_horizon = 400         # optional; defaults to horizon
//! heatmap_cutoff = 3.0
//! ```
//!
//! NLSE states take an `[nlse]` table with any of `a`, `a1`, `a2`,
//! `x_points`, `dt`, `role_swap`, `start`; omitted keys keep the defaults of
//! the chosen state. CGLE takes a `[cgle]` table with `CglParams` fields.
//! Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esn::EsnHyperParams;
use crate::field::{Encoding, FieldSeries};
use crate::systems::{self, encode, CglParams, KseParams, NlseParams, NlseState};
use crate::topology::{TopologyKind, TopologySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Akhmediev,
    KuznetsovMa,
    Collision,
    Kse,
    Cgle,
}

impl SystemKind {
    fn default_encoding(self) -> Encoding {
        match self {
            SystemKind::Kse => Encoding::RealScalar,
            SystemKind::Cgle => Encoding::RealImagSplit,
            _ => Encoding::Magnitude,
        }
    }

    fn is_nlse(self) -> bool {
        matches!(self, SystemKind::Akhmediev | SystemKind::KuznetsovMa | SystemKind::Collision)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<Encoding>,
}

/// Overrides for the NLSE state defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role_swap: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsnSection {
    pub n: usize,
    #[serde(default = "one")]
    pub input_scale: f64,
    #[serde(default = "ten")]
    pub transient_steps: usize,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub kind: TopologyKind,
    #[serde(default = "three")]
    pub avg_degree: f64,
    #[serde(default)]
    pub rewire_prob: f64,
}

impl Default for TopologySection {
    fn default() -> Self {
        TopologySection {
            kind: TopologyKind::DirectedRandom,
            avg_degree: 3.0,
            rewire_prob: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// Continue from the state at the end of training.
    Warm,
    /// Zero state spun up on `warmup_steps` true samples after training.
    Cold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_grid: Option<Vec<f64>>,
    pub ensemble_size: usize,
    pub train_steps: usize,
    pub horizon: usize,
    #[serde(default = "warm")]
    pub start_mode: StartMode,
    #[serde(default = "hundred")]
    pub warmup_steps: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "half")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valley_horizon: Option<usize>,
    #[serde(default = "three")]
    pub heatmap_cutoff: f64,
}

fn one() -> f64 {
    1.0
}
fn ten() -> usize {
    10
}
fn hundred() -> usize {
    100
}
fn three() -> f64 {
    3.0
}
fn half() -> f64 {
    0.5
}
fn default_ridge() -> f64 {
    1e-4
}
fn warm() -> StartMode {
    StartMode::Warm
}

/// A complete sweep experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub system: SystemSection,
    pub esn: EsnSection,
    #[serde(default)]
    pub topology: TopologySection,
    pub sweep: SweepSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nlse: Option<NlseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kse: Option<KseParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cgle: Option<CglParams>,
}

/// The resolved target system.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemConfig {
    Nlse(NlseParams),
    Kse(KseParams),
    Cgle(CglParams),
}

impl SystemConfig {
    pub fn dt(&self) -> f64 {
        match self {
            SystemConfig::Nlse(p) => p.dt,
            SystemConfig::Kse(p) => p.dt,
            SystemConfig::Cgle(p) => p.sample_dt,
        }
    }

    pub fn lyapunov_max(&self) -> Option<f64> {
        match self {
            SystemConfig::Nlse(_) => None,
            SystemConfig::Kse(p) => Some(p.lyapunov_max),
            SystemConfig::Cgle(p) => Some(p.lyapunov_max),
        }
    }

    /// Generates `steps` samples and encodes them.
    pub fn generate(&self, steps: usize, encoding: Encoding) -> Result<FieldSeries<f64>> {
        if steps == 0 {
            return Err(Error::invalid("requested a series of zero steps"));
        }
        match self {
            SystemConfig::Nlse(p) => encode(&systems::nlse::generate::<f64>(p, steps)?, encoding),
            SystemConfig::Kse(p) => encode(&systems::solve_kse::<f64>(p, steps)?, encoding),
            SystemConfig::Cgle(p) => encode(&systems::solve_cgle::<f64>(p, steps)?, encoding),
        }
    }
}

/// `count` values spaced evenly in log from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// `lo, lo + step, …` up to `hi` inclusive (with rounding slack).
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text` after applying `section.key=value` overrides. Values are
    /// parsed as TOML (so `0.5`, `true`, `[1, 2]`, `"cold"`) and fall back to
    /// plain strings.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let spec: SweepSpec = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("sweep spec serialises")
    }

    pub fn encoding(&self) -> Encoding {
        self.system.encoding.unwrap_or(self.system.kind.default_encoding())
    }

    pub fn system_config(&self) -> Result<SystemConfig> {
        let kind = self.system.kind;
        let cfg = if kind.is_nlse() {
            let mut p = match kind {
                SystemKind::Akhmediev => NlseParams::akhmediev(),
                SystemKind::KuznetsovMa => NlseParams::kuznetsov_ma(),
                _ => NlseParams::collision(0.14, 0.34),
            };
            if let Some(s) = &self.nlse {
                p.a = s.a.unwrap_or(p.a);
                p.a1 = s.a1.unwrap_or(p.a1);
                p.a2 = s.a2.unwrap_or(p.a2);
                p.x_points = s.x_points.unwrap_or(p.x_points);
                p.dt = s.dt.unwrap_or(p.dt);
                p.role_swap = s.role_swap.unwrap_or(p.role_swap);
                p.start = s.start.unwrap_or(p.start);
            }
            debug_assert!(p.state != NlseState::Collision || kind == SystemKind::Collision);
            p.validate()?;
            SystemConfig::Nlse(p)
        } else if kind == SystemKind::Kse {
            let p = self.kse.clone().unwrap_or_default();
            p.validate()?;
            SystemConfig::Kse(p)
        } else {
            let p = self.cgle.clone().unwrap_or_default();
            p.validate()?;
            SystemConfig::Cgle(p)
        };
        Ok(cfg)
    }

    pub fn rho_grid(&self) -> Vec<f64> {
        match &self.sweep.rho_grid {
            Some(g) => g.clone(),
            None if self.system.kind.is_nlse() => linear_grid(0.0, 2.0, 0.05),
            None => log_grid(1e-4, 4.0, 25),
        }
    }

    /// Samples consumed before the first predicted sample.
    pub fn lead_steps(&self) -> usize {
        match self.sweep.start_mode {
            StartMode::Warm => self.sweep.train_steps,
            StartMode::Cold => self.sweep.train_steps + self.sweep.warmup_steps,
        }
    }

    /// Length of the truth series: training, optional warmup, horizon.
    pub fn truth_steps(&self) -> usize {
        self.lead_steps() + self.sweep.horizon
    }

    pub fn valley_horizon(&self) -> usize {
        self.sweep.valley_horizon.unwrap_or(self.sweep.horizon)
    }

    /// Hyperparameters for `channels` input channels sampled at `dt`.
    pub fn hyper(&self, channels: usize, dt: f64) -> EsnHyperParams {
        EsnHyperParams {
            n: self.esn.n,
            input_dim: channels,
            output_dim: channels,
            input_scale: self.esn.input_scale,
            transient_steps: self.esn.transient_steps,
            ridge: self.esn.ridge,
            dt,
        }
    }

    /// Topology template with the given seed.
    pub fn topology_spec(&self, seed: u64) -> TopologySpec {
        TopologySpec {
            kind: self.topology.kind,
            n: self.esn.n,
            avg_degree: self.topology.avg_degree,
            rewire_prob: self.topology.rewire_prob,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.rho_grid();
        if g.is_empty() {
            return Err(Error::Config("rho_grid is empty".into()));
        }
        if g.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::Config("rho values must be finite and nonnegative".into()));
        }
        if g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("rho_grid must be strictly ascending".into()));
        }
        let s = &self.sweep;
        if s.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be at least 1".into()));
        }
        if s.train_steps < self.esn.transient_steps + 2 {
            return Err(Error::Config(format!(
                "train_steps={} must exceed transient_steps={} by at least 2",
                s.train_steps, self.esn.transient_steps
            )));
        }
        if s.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if s.start_mode == StartMode::Cold && s.warmup_steps == 0 {
            return Err(Error::Config("cold start needs warmup_steps > 0".into()));
        }
        let vh = self.valley_horizon();
        if vh == 0 || vh > s.horizon {
            return Err(Error::Config(format!("valley_horizon={vh} must lie in 1..={}", s.horizon)));
        }
        if !(s.heatmap_cutoff > 0.0) {
            return Err(Error::Config("heatmap_cutoff must be positive".into()));
        }
        if self.esn.ridge < 0.0 || self.esn.n == 0 {
            return Err(Error::Config("esn.n must be positive and esn.ridge nonnegative".into()));
        }
        self.topology_spec(0).validate()?;
        let system = self.system_config()?;
        let channels = match (&system, self.encoding()) {
            (SystemConfig::Kse(_), Encoding::RealImagSplit) => {
                return Err(Error::Config("KSE is real; real_imag_split does not apply".into()))
            }
            (SystemConfig::Nlse(p), Encoding::RealImagSplit) => 2 * p.x_points,
            (SystemConfig::Cgle(p), Encoding::RealImagSplit) => 2 * p.x_points,
            (SystemConfig::Nlse(p), _) => p.x_points,
            (SystemConfig::Kse(p), _) => p.x_points,
            (SystemConfig::Cgle(p), _) => p.x_points,
        };
        self.hyper(channels, system.dt()).validate()
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let value = parse_value(raw.trim());
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{part}' is not a table")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system]
kind = "akhmediev"

[esn]
n = 128

[sweep]
rho_grid = [0.5, 1.0]
ensemble_size = 2
train_steps = 200
horizon = 50
"#;

    #[test]
    fn minimal_config_with_defaults() {
        let s = SweepSpec::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.encoding(), Encoding::Magnitude);
        assert_eq!(s.esn.ridge, 1e-4);
        assert_eq!(s.topology.kind, TopologyKind::DirectedRandom);
        assert_eq!(s.truth_steps(), 250);
        match s.system_config().unwrap() {
            SystemConfig::Nlse(p) => assert_eq!(p.a, 0.25),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_and_round_trip() {
        let s = SweepSpec::from_toml_with_overrides(
            MINIMAL,
            &["sweep.start_mode=cold".into(), "esn.n=256".into(), "nlse.a=0.3".into()],
        )
        .unwrap();
        assert_eq!(s.sweep.start_mode, StartMode::Cold);
        assert_eq!(s.esn.n, 256);
        assert_eq!(s.truth_steps(), 350);
        let back = SweepSpec::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(SweepSpec::from_toml_with_overrides(MINIMAL, &["esn.bogus=1".into()]).is_err());
        assert!(SweepSpec::from_toml_with_overrides(MINIMAL, &["sweep.rho_grid=[1.0, 0.5]".into()]).is_err());
        assert!(SweepSpec::from_toml_with_overrides(MINIMAL, &["esn.n=100".into()]).is_err());
        assert!(SweepSpec::from_toml_with_overrides(MINIMAL, &["sweep.train_steps=5".into()]).is_err());
        assert!(SweepSpec::from_toml_with_overrides(MINIMAL, &["novalue".into()]).is_err());
    }

    #[test]
    fn default_grids() {
        let g = linear_grid(0.0, 2.0, 0.05);
        assert_eq!(g.len(), 41);
        assert!((g[40] - 2.0).abs() < 1e-12);
        let l = log_grid(1e-4, 4.0, 25);
        assert!((l[0] - 1e-4).abs() < 1e-18 && (l[24] - 4.0).abs() < 1e-12);
    }
}
