//! Ground-truth fields: analytic NLSE states and numerically integrated
//! Kuramoto–Sivashinsky and complex Ginzburg–Landau chaos.

pub mod cgle;
pub mod kse;
pub mod nlse;
pub mod sampled;
pub mod spectral;

pub use cgle::{solve_cgle, CglParams, CglSolver};
pub use kse::{solve_kse, KseParams, KseSolver};
pub use nlse::{BreatherVariant, NlseParams, NlseState};
pub use sampled::{encode, FieldValue, SampledField};
