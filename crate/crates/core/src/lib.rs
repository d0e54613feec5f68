//! Discrete-time fractional-order dynamical systems.
//!
//! The model is
//!
//! ```text
//! Δ^α x[k+1] = A x[k] + B u[k],   y[k] = C x[k]
//! ```
//!
//! where the Grünwald-Letnikov difference gives every state channel an
//! unbounded memory of its own past. Expanding the difference turns the
//! model into a linear recursion with matrix taps `A_j` over the whole
//! history, which is what every routine in this crate works with:
//!
//! - [`frac`]: coefficients, memory matrices, propagators, exact simulation.
//! - [`observer`]: Luenberger-like estimators (single gain and memory gains).
//! - [`feedback`]: memory state feedback and coupled plant/observer runs.
//! - [`separation`]: block-Toeplitz truncations of the closed-loop operator
//!   and a spectral check that it splits into controller and observer parts.
//! - [`mpc`]: finite-order autoregressive predictors and a receding-horizon
//!   least-squares tracking controller.
//! - [`presets`]: the 4-channel EEG-identified model and a scalar toy model.

pub mod design;
pub mod error;
pub mod feedback;
pub mod frac;
pub mod linalg;
pub mod mpc;
pub mod observer;
pub mod presets;
pub mod separation;

pub use error::{FodsError, Result};
pub use feedback::{closed_loop_simulate, design_feedback_gain, feedback_input, ClosedLoopTrace, FeedbackGains};
pub use frac::{
    build_coefficient_table, closed_form_state, gl_coefficient, propagators, simulate, simulate_windowed,
    CoefficientTable, FractionalOrders, PropagatorSet, SystemModel, Trajectory,
};
pub use mpc::{
    condense, mvar_truncate, predict, run_mpc_closed_loop, solve_mpc_step, square_wave_reference, Condensed,
    MpcConfig, MpcRun, MpcSolution, MvarModel, ReferenceSignal, StateHistory,
};
pub use observer::{
    design_observer_gain, error_trajectory, observer_step, observer_step_memory, ErrorTrajectory, EstimateHistory,
    ObserverGains,
};
pub use separation::{spectrum, toeplitz_truncation, verify_separation, SeparationReport, TruncationBlocks};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
