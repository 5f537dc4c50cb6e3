//! Echo-state-network reservoir computing for spatiotemporal fields, with
//! ensemble sweeps over the reservoir spectral radius.
//!
//! The numerical core is generic over [`Real`] (`f32`/`f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the sweep harness and
//! the command-line tool use.

// Parameter guards are written `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod error;
pub mod esn;
pub mod field;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod sweep;
pub mod systems;
pub mod topology;

pub use error::{Error, Result};
pub use scalar::Real;
pub use topology::{
    assign_weights, generate_topology, scale_to_spectral_radius, EdgeSet, ReservoirNetwork, TopologyKind,
    TopologySpec,
};

pub use esn::{EsnHyperParams, EsnModel, InputMap, ReservoirState};
pub use field::{Encoding, FieldSeries, SeriesMeta};

pub type Network64 = ReservoirNetwork<f64>;
pub type Model64 = EsnModel<f64>;
pub type Series64 = FieldSeries<f64>;
pub type State64 = ReservoirState<f64>;
