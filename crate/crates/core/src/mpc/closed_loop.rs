use crate::error::{FodsError, Result};
use crate::feedback::ClosedLoopTrace;
use crate::frac::{build_coefficient_table, simulate, SystemModel};
use crate::observer::{observer_step_memory, EstimateHistory, ObserverGains};
use crate::Vector;

use super::condense::solve_mpc_step;
use super::mvar::{mvar_truncate, StateHistory};
use super::reference::ReferenceSignal;
use super::MpcConfig;

/// Diagnostics of one solve inside a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRecord {
    pub step: usize,
    pub cost: f64,
    pub zero_cost: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcRun {
    pub trace: ClosedLoopTrace,
    pub solves: Vec<SolveRecord>,
}

/// Receding-horizon control of the full-memory plant from observer estimates.
///
/// Every M steps the controller solves over P steps using the last p
/// estimates as predictor history and applies the M moves it gets back.
/// The observer is updated from `y = C x` at every step.
#[allow(clippy::too_many_arguments)]
pub fn run_mpc_closed_loop(
    plant: &SystemModel,
    config: &MpcConfig,
    ogains: &ObserverGains,
    reference: &ReferenceSignal,
    steps: usize,
    x0: &Vector,
    xhat0: &Vector,
) -> Result<MpcRun> {
    config.validate()?;
    ogains.check(plant)?;
    plant.check_state(x0, "x0")?;
    let horizon = config.prediction_horizon;
    if reference.len() < steps + horizon {
        return Err(FodsError::Precondition(format!(
            "reference has {} samples, needs {} (steps + prediction horizon)",
            reference.len(),
            steps + horizon
        )));
    }
    if reference.samples.iter().any(|r| r.len() != plant.states()) {
        return Err(FodsError::dims("reference sample length differs from the state dimension"));
    }
    let table = build_coefficient_table(plant, steps.max(config.mvar_order).saturating_sub(1));
    let mvar = mvar_truncate(&table, plant.b(), config.mvar_order)?;

    let mut est = EstimateHistory::new(plant, xhat0.clone())?;
    let mut states = vec![x0.clone()];
    let mut outputs = vec![plant.output(x0)];
    let mut inputs: Vec<Vector> = Vec::with_capacity(steps);
    let mut solves = Vec::new();
    let mut pending: Vec<Vector> = Vec::new();

    for k in 0..steps {
        if k % config.control_horizon == 0 {
            let history = StateHistory::tail(est.estimates(), config.mvar_order)?;
            let window = &reference.samples[k + 1..k + 1 + horizon];
            let sol = solve_mpc_step(&mvar, &history, window, config).map_err(|e| match e {
                FodsError::Degenerate(msg) => FodsError::Degenerate(format!("step {k}: {msg}")),
                other => other,
            })?;
            solves.push(SolveRecord {
                step: k,
                cost: sol.cost,
                zero_cost: sol.zero_cost,
                gradient_norm: sol.gradient_norm,
            });
            pending = sol.moves;
        }
        let u = pending[k % config.control_horizon].clone();
        inputs.push(u);
        let mut next = table.memory_sum(&states, None)?;
        next.gemv(1.0, plant.b(), &inputs[k], 1.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::NumericOverflow { step: k + 1, what: "plant state" });
        }
        let xhat = observer_step_memory(plant, &table, ogains, &est, &inputs, &outputs)?;
        if xhat.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::NumericOverflow { step: k + 1, what: "state estimate" });
        }
        est.push(plant, xhat);
        outputs.push(plant.output(&next));
        states.push(next);
    }
    let trace = ClosedLoopTrace::from_parts(plant, states, est.into_estimates(), inputs);
    Ok(MpcRun { trace, solves })
}

/// RMS of `x[k] - x_ref[k]` over all channels and steps `1..states.len()`.
///
/// Step 0 is excluded since no input can influence it.
pub fn tracking_rms(states: &[Vector], reference: &ReferenceSignal) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, r) in states.iter().zip(&reference.samples).skip(1) {
        sum += (x - r).norm_squared();
        count += x.len();
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// Plant states under `u ≡ 0`.
pub fn zero_input_baseline(plant: &SystemModel, x0: &Vector, steps: usize) -> Result<Vec<Vector>> {
    let zero = vec![Vector::zeros(plant.inputs()); steps];
    Ok(simulate(plant, x0, &zero)?.states)
}
