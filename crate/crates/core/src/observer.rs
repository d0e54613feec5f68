//! Luenberger-like observers for the fractional model.
//!
//! Single gain:
//!
//! ```text
//! x̂[k+1] = Σ_{j=0}^{k} A_j x̂[k-j] + B u[k] + L (y[k] - ŷ[k]),   ŷ = C x̂
//! ```
//!
//! Memory gains replace the innovation by `Σ_j L_j (y[k-j] - ŷ[k-j])`; the
//! single-gain observer is the list `[L]` with every later tap zero.

use crate::design::{format_modes, place_radius, unshiftable_modes};
use crate::error::{FodsError, Result};
use crate::frac::{build_coefficient_table, CoefficientTable, SystemModel};
use crate::{Matrix, Vector};

/// Observer gains `L_0..L_J`, each n×m.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    gains: Vec<Matrix>,
}

impl ObserverGains {
    pub fn new(gains: Vec<Matrix>) -> Result<Self> {
        let first = gains.first().ok_or_else(|| FodsError::Config("observer needs at least one gain".into()))?;
        let shape = first.shape();
        if let Some(j) = gains.iter().position(|g| g.shape() != shape) {
            return Err(FodsError::dims(format!("L_{j} has shape {:?}, expected {shape:?}", gains[j].shape())));
        }
        Ok(ObserverGains { gains })
    }

    pub fn single(l: Matrix) -> Self {
        ObserverGains { gains: vec![l] }
    }

    pub fn zero(model: &SystemModel) -> Self {
        Self::single(Matrix::zeros(model.states(), model.outputs()))
    }

    pub fn gains(&self) -> &[Matrix] {
        &self.gains
    }

    /// `L_j`, zero past the stored list.
    pub fn gain(&self, j: usize) -> Option<&Matrix> {
        self.gains.get(j)
    }

    pub fn is_single(&self) -> bool {
        self.gains.len() == 1
    }

    pub(crate) fn check(&self, model: &SystemModel) -> Result<()> {
        let want = (model.states(), model.outputs());
        if self.gains[0].shape() != want {
            return Err(FodsError::dims(format!(
                "observer gain has shape {:?}, expected {want:?}",
                self.gains[0].shape()
            )));
        }
        Ok(())
    }
}

/// Estimates `x̂[0..k]` with their predicted outputs `ŷ = C x̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateHistory {
    estimates: Vec<Vector>,
    predicted_outputs: Vec<Vector>,
}

impl EstimateHistory {
    pub fn new(model: &SystemModel, xhat0: Vector) -> Result<Self> {
        model.check_state(&xhat0, "xhat0")?;
        let y = model.output(&xhat0);
        Ok(EstimateHistory { estimates: vec![xhat0], predicted_outputs: vec![y] })
    }

    pub fn push(&mut self, model: &SystemModel, xhat: Vector) {
        self.predicted_outputs.push(model.output(&xhat));
        self.estimates.push(xhat);
    }

    pub fn estimates(&self) -> &[Vector] {
        &self.estimates
    }

    pub fn predicted_outputs(&self) -> &[Vector] {
        &self.predicted_outputs
    }

    /// Latest estimate.
    pub fn current(&self) -> &Vector {
        self.estimates.last().expect("history is never empty")
    }

    /// Index k of the latest estimate.
    pub fn step(&self) -> usize {
        self.estimates.len() - 1
    }

    pub fn into_estimates(self) -> Vec<Vector> {
        self.estimates
    }
}

/// Estimation errors `e[0..K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrajectory {
    pub errors: Vec<Vector>,
}

/// One step of the single-gain observer: returns `x̂[k+1]`.
pub fn observer_step(
    model: &SystemModel,
    table: &CoefficientTable,
    gains: &ObserverGains,
    est: &EstimateHistory,
    u: &Vector,
    y: &Vector,
) -> Result<Vector> {
    if !gains.is_single() {
        return Err(FodsError::Config(format!(
            "single-gain observer step given {} gains",
            gains.gains().len()
        )));
    }
    gains.check(model)?;
    model.check_input(u, "u")?;
    model.check_output(y, "y")?;
    let mut next = table.memory_sum(est.estimates(), None)?;
    next.gemv(1.0, model.b(), u, 1.0);
    let innovation = y - est.predicted_outputs().last().expect("history is never empty");
    next.gemv(1.0, &gains.gains()[0], &innovation, 1.0);
    Ok(next)
}

/// One step of the memory-gain observer: returns `x̂[k+1]`.
///
/// `inputs` must reach step k and `outputs` must cover `y[0..=k]`. Gains
/// past the stored list count as zero.
pub fn observer_step_memory(
    model: &SystemModel,
    table: &CoefficientTable,
    gains: &ObserverGains,
    est: &EstimateHistory,
    inputs: &[Vector],
    outputs: &[Vector],
) -> Result<Vector> {
    gains.check(model)?;
    let k = est.step();
    let u = inputs
        .get(k)
        .ok_or_else(|| FodsError::Precondition(format!("input history ends before step {k}")))?;
    if outputs.len() <= k {
        return Err(FodsError::Precondition(format!("output history ends before step {k}")));
    }
    model.check_input(u, "u")?;
    let mut next = table.memory_sum(est.estimates(), None)?;
    next.gemv(1.0, model.b(), u, 1.0);
    let yhat = est.predicted_outputs();
    for (j, l) in gains.gains().iter().enumerate().take(k + 1) {
        let y = &outputs[k - j];
        model.check_output(y, "y")?;
        let innovation = y - &yhat[k - j];
        next.gemv(1.0, l, &innovation, 1.0);
    }
    Ok(next)
}

/// Gain `L` with `ρ(A_0 - L C) ≤ target_radius`, by placement on `(A_0ᵀ, Cᵀ)`.
pub fn design_observer_gain(table: &CoefficientTable, c: &Matrix, target_radius: f64) -> Result<Matrix> {
    let a0 = &table.memory_matrices()[0];
    if c.ncols() != a0.nrows() {
        return Err(FodsError::dims(format!("C has {} columns, expected {}", c.ncols(), a0.nrows())));
    }
    let at = a0.transpose();
    let ct = c.transpose();
    if target_radius.is_finite() && target_radius >= 0.0 {
        let hidden = unshiftable_modes(&at, &ct, target_radius)?;
        if !hidden.is_empty() {
            return Err(FodsError::Design(format!(
                "pair (A_0, C) is not detectable at radius {target_radius}; unobservable modes: {}",
                format_modes(&hidden)
            )));
        }
    }
    let f = place_radius(&at, &ct, target_radius)?;
    Ok(-f.transpose())
}

/// Autonomous error recursion `e[k+1] = Σ A_j e[k-j] - Σ L_j C e[k-j]`.
pub fn error_trajectory(model: &SystemModel, gains: &ObserverGains, e0: &Vector, steps: usize) -> Result<ErrorTrajectory> {
    gains.check(model)?;
    model.check_state(e0, "e0")?;
    let table = build_coefficient_table(model, steps.saturating_sub(1));
    let lc: Vec<Matrix> = gains.gains().iter().map(|l| l * model.c()).collect();
    let mut errors = Vec::with_capacity(steps + 1);
    errors.push(e0.clone());
    for k in 0..steps {
        let mut next = table.memory_sum(&errors, None)?;
        for (j, m) in lc.iter().enumerate().take(k + 1) {
            next.gemv(-1.0, m, &errors[k - j], 1.0);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::NumericOverflow { step: k + 1, what: "estimation error" });
        }
        errors.push(next);
    }
    Ok(ErrorTrajectory { errors })
}
