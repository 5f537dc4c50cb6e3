//! Ensemble sweeps over the reservoir spectral radius.

pub mod output;
pub mod run;
pub mod seeds;
pub mod spec;

pub use output::write_results;
pub use run::{RunRecord, SweepPlan, SweepResult};
pub use seeds::{derive_seeds, RunSeeds};
pub use spec::{StartMode, SweepSpec, SystemConfig, SystemKind};
