//! Memory state feedback `u[k] = Σ_j F_j x̂[k-j]` and coupled plant/observer runs.

use crate::design::place_radius;
use crate::error::{FodsError, Result};
use crate::frac::{build_coefficient_table, CoefficientTable, SystemModel};
use crate::linalg::tap_sum;
use crate::observer::{observer_step_memory, EstimateHistory, ObserverGains};
use crate::{Matrix, Vector};

/// Feedback taps `F_0..F_J`, each p×n; later taps are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGains {
    gains: Vec<Matrix>,
}

impl FeedbackGains {
    pub fn new(gains: Vec<Matrix>) -> Result<Self> {
        let first = gains.first().ok_or_else(|| FodsError::Config("feedback needs at least one gain".into()))?;
        let shape = first.shape();
        if let Some(j) = gains.iter().position(|g| g.shape() != shape) {
            return Err(FodsError::dims(format!("F_{j} has shape {:?}, expected {shape:?}", gains[j].shape())));
        }
        Ok(FeedbackGains { gains })
    }

    pub fn memoryless(f0: Matrix) -> Self {
        FeedbackGains { gains: vec![f0] }
    }

    pub fn zero(model: &SystemModel) -> Self {
        Self::memoryless(Matrix::zeros(model.inputs(), model.states()))
    }

    pub fn gains(&self) -> &[Matrix] {
        &self.gains
    }

    pub(crate) fn check(&self, model: &SystemModel) -> Result<()> {
        let want = (model.inputs(), model.states());
        if self.gains[0].shape() != want {
            return Err(FodsError::dims(format!("feedback gain has shape {:?}, expected {want:?}", self.gains[0].shape())));
        }
        Ok(())
    }
}

/// `u[k] = Σ_{j=0}^{k} F_j x̂[k-j]`.
pub fn feedback_input(gains: &FeedbackGains, est: &EstimateHistory) -> Vector {
    tap_sum(gains.gains(), est.estimates(), None)
}

/// `F_0` with `ρ(A_0 + B F_0) ≤ target_radius`; callers keep `F_{j≥1} = 0`.
pub fn design_feedback_gain(table: &CoefficientTable, b: &Matrix, target_radius: f64) -> Result<Matrix> {
    place_radius(&table.memory_matrices()[0], b, target_radius)
}

/// Signals of a coupled plant/observer/feedback run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopTrace {
    pub plant_states: Vec<Vector>,
    pub estimates: Vec<Vector>,
    pub errors: Vec<Vector>,
    pub inputs: Vec<Vector>,
    pub outputs: Vec<Vector>,
}

impl ClosedLoopTrace {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub(crate) fn from_parts(model: &SystemModel, plant_states: Vec<Vector>, estimates: Vec<Vector>, inputs: Vec<Vector>) -> Self {
        let errors = plant_states.iter().zip(&estimates).map(|(x, xh)| x - xh).collect();
        let outputs = plant_states.iter().map(|x| model.output(x)).collect();
        ClosedLoopTrace { plant_states, estimates, errors, inputs, outputs }
    }
}

/// Plant driven by memory feedback on the observer estimate.
pub fn closed_loop_simulate(
    model: &SystemModel,
    fgains: &FeedbackGains,
    ogains: &ObserverGains,
    x0: &Vector,
    xhat0: &Vector,
    steps: usize,
) -> Result<ClosedLoopTrace> {
    fgains.check(model)?;
    ogains.check(model)?;
    model.check_state(x0, "x0")?;
    let table = build_coefficient_table(model, steps.saturating_sub(1));
    let mut est = EstimateHistory::new(model, xhat0.clone())?;
    let mut states = vec![x0.clone()];
    let mut outputs = vec![model.output(x0)];
    let mut inputs = Vec::with_capacity(steps);
    for k in 0..steps {
        let u = feedback_input(fgains, &est);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::NumericOverflow { step: k, what: "feedback input" });
        }
        inputs.push(u);
        let mut next = table.memory_sum(&states, None)?;
        next.gemv(1.0, model.b(), &inputs[k], 1.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::NumericOverflow { step: k + 1, what: "plant state" });
        }
        let xhat = observer_step_memory(model, &table, ogains, &est, &inputs, &outputs)?;
        if xhat.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::NumericOverflow { step: k + 1, what: "state estimate" });
        }
        est.push(model, xhat);
        outputs.push(model.output(&next));
        states.push(next);
    }
    Ok(ClosedLoopTrace::from_parts(model, states, est.into_estimates(), inputs))
}

/// Largest residual of `x[k+1] = Σ (A_j + B F_j) x[k-j] - Σ B F_j e[k-j]` over a trace.
pub fn plant_residual(model: &SystemModel, fgains: &FeedbackGains, trace: &ClosedLoopTrace) -> f64 {
    let steps = trace.steps();
    let table = build_coefficient_table(model, steps.saturating_sub(1));
    let bf: Vec<Matrix> = fgains.gains().iter().map(|f| model.b() * f).collect();
    let closed: Vec<Matrix> = table
        .memory_matrices()
        .iter()
        .enumerate()
        .map(|(j, a)| bf.get(j).map_or_else(|| a.clone(), |m| a + m))
        .collect();
    (0..steps)
        .map(|k| {
            let hist_x = &trace.plant_states[..=k];
            let hist_e = &trace.errors[..=k];
            let r = &trace.plant_states[k + 1] - tap_sum(&closed, hist_x, None) + tap_sum(&bf, hist_e, None);
            r.amax()
        })
        .fold(0.0, f64::max)
}

/// Largest residual of `e[k+1] = Σ A_j e[k-j] - Σ L_j C e[k-j]` over a trace.
pub fn error_residual(model: &SystemModel, ogains: &ObserverGains, trace: &ClosedLoopTrace) -> f64 {
    let steps = trace.steps();
    let table = build_coefficient_table(model, steps.saturating_sub(1));
    let lc: Vec<Matrix> = ogains.gains().iter().map(|l| l * model.c()).collect();
    (0..steps)
        .map(|k| {
            let hist = &trace.errors[..=k];
            let r = &trace.errors[k + 1] - tap_sum(table.memory_matrices(), hist, None) + tap_sum(&lc, hist, None);
            r.amax()
        })
        .fold(0.0, f64::max)
}
