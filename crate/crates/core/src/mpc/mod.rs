//! Finite-order autoregressive prediction and receding-horizon tracking.
//!
//! The controller never sees the fractional model directly. It predicts
//! with the first `p` memory matrices only,
//!
//! ```text
//! x[k+1] = Σ_{j=0}^{p-1} A_j x[k-j] + B u[k],
//! ```
//!
//! lifts that predictor over the horizon and minimizes the squared tracking
//! error by least squares. The plant it drives keeps its full memory.

mod closed_loop;
mod condense;
mod mvar;
mod reference;

pub use closed_loop::{run_mpc_closed_loop, tracking_rms, zero_input_baseline, MpcRun, SolveRecord};
pub use condense::{condense, solve_mpc_step, Condensed, MpcSolution};
pub use mvar::{mvar_truncate, predict, MvarModel, StateHistory};
pub use reference::{square_wave_reference, ReferenceSignal};

use crate::error::{FodsError, Result};

/// Horizons and weights of the receding-horizon controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    /// Prediction horizon P in steps.
    pub prediction_horizon: usize,
    /// Control horizon M in steps, `1 ≤ M ≤ P`.
    pub control_horizon: usize,
    /// Number of memory taps p kept by the predictor.
    pub mvar_order: usize,
    /// Input energy weight λ.
    pub regularization: f64,
    /// Sample rate in Hz.
    pub sample_rate: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            prediction_horizon: 8,
            control_horizon: 4,
            mvar_order: 16,
            regularization: 1e-6,
            sample_rate: 160.0,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.control_horizon == 0 || self.control_horizon > self.prediction_horizon {
            return Err(FodsError::Config(format!(
                "control_horizon ({}) must satisfy 1 <= control_horizon <= prediction_horizon ({})",
                self.control_horizon, self.prediction_horizon
            )));
        }
        if self.mvar_order == 0 {
            return Err(FodsError::Config("mvar_order must be at least 1".into()));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(FodsError::Config(format!("regularization {} must be finite and >= 0", self.regularization)));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(FodsError::Config(format!("sample_rate {} must be positive", self.sample_rate)));
        }
        Ok(())
    }
}
