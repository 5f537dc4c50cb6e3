//! Echo-state network: input map, tanh reservoir update, even-position
//! squaring, ridge readout and closed-loop prediction.

mod input;
mod io;
mod model;
mod readout;

pub use input::InputMap;
pub use model::{normalize_into, normalize_state, EsnModel, FitReport, Listened, Prediction, ReservoirState};
pub use readout::{train_readout, RidgeAccumulator};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed (untrained) parameters of an echo-state network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsnHyperParams {
    /// Reservoir size `N`.
    pub n: usize,
    /// Input channels `M`.
    pub input_dim: usize,
    /// Output channels `L`; equal to `M` since predictions are fed back.
    pub output_dim: usize,
    /// Input weights are uniform on `[-input_scale, input_scale]`.
    pub input_scale: f64,
    /// Leading training states discarded before the readout fit.
    pub transient_steps: usize,
    /// Ridge regularisation `Γ`.
    pub ridge: f64,
    pub dt: f64,
}

impl EsnHyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.n == 0 {
            return Err(Error::invalid("reservoir size and input dimension must be positive"));
        }
        if !self.n.is_multiple_of(self.input_dim) {
            return Err(Error::invalid(format!(
                "reservoir size {} is not divisible by input dimension {}",
                self.n, self.input_dim
            )));
        }
        if self.input_dim != self.output_dim {
            return Err(Error::invalid(format!(
                "input dimension {} differs from output dimension {}",
                self.input_dim, self.output_dim
            )));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::invalid(format!("ridge {} must be finite and >= 0", self.ridge)));
        }
        if !(self.input_scale >= 0.0) || !self.input_scale.is_finite() {
            return Err(Error::invalid(format!("input scale {} must be finite and >= 0", self.input_scale)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid(format!("dt {} must be positive", self.dt)));
        }
        Ok(())
    }

    /// Neurons driven by each input channel.
    pub fn block_size(&self) -> usize {
        self.n / self.input_dim
    }
}
