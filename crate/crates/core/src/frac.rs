//! Grünwald-Letnikov coefficients and exact simulation of the fractional model.
//!
//! Expanding `Δ^α x[k+1]` gives
//!
//! ```text
//! x[k+1] = Σ_{j=0}^{k} A_j x[k-j] + B u[k],
//! A_0 = A - D(α,1),   A_j = -D(α,j+1) for j ≥ 1,
//! ```
//!
//! with `D(α,j) = diag(ψ(α_1,j), …, ψ(α_n,j))`. The same recursion, read as a
//! sum of propagators `G_k`, gives the closed-form solution
//! `x[k] = G_k x[0] + Σ_{j<k} G_{k-1-j} B u[j]`.

use std::fmt::Write as _;

use crate::error::{FodsError, Result};
use crate::linalg::{all_finite, tap_sum};
use crate::{Matrix, Vector};

/// Grünwald-Letnikov weight `ψ(α, j) = Γ(j-α) / (Γ(-α) Γ(j+1))`.
///
/// Evaluated with the recurrence `ψ(α,j) = ψ(α,j-1)·(j-1-α)/j`, `ψ(α,0) = 1`,
/// which stays finite long after the gamma quotient overflows.
pub fn gl_coefficient(alpha: f64, j: usize) -> f64 {
    let mut psi = 1.0;
    for i in 1..=j {
        psi *= (i as f64 - 1.0 - alpha) / i as f64;
    }
    psi
}

/// Per-channel fractional orders.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalOrders(Vec<f64>);

impl FractionalOrders {
    /// Default open validity interval for each order.
    pub const DEFAULT_RANGE: (f64, f64) = (0.0, 2.0);

    /// Orders restricted to the default interval `(0, 2)`.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        let (lo, hi) = Self::DEFAULT_RANGE;
        Self::with_range(alpha, lo, hi)
    }

    /// Orders restricted to the open interval `(lo, hi)`.
    pub fn with_range(alpha: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        let orders = Self::relaxed(alpha)?;
        if let Some((i, a)) = orders.0.iter().enumerate().find(|(_, &a)| !(a > lo && a < hi)) {
            return Err(FodsError::Config(format!("alpha[{i}] = {a} outside ({lo}, {hi})")));
        }
        Ok(orders)
    }

    /// Any finite orders; used when strict validation is switched off.
    pub fn relaxed(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(FodsError::Config("alpha must have at least one entry".into()));
        }
        if let Some(i) = alpha.iter().position(|a| !a.is_finite()) {
            return Err(FodsError::Config(format!("alpha[{i}] is not finite")));
        }
        Ok(FractionalOrders(alpha))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `Δ^α x[k+1] = A x[k] + B u[k]`, `y[k] = C x[k]`.
///
/// `A` is n×n, `B` is n×p and `C` is m×n.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    alpha: FractionalOrders,
}

impl SystemModel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, alpha: FractionalOrders) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(FodsError::dims(format!("A must be square and non-empty, got {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n {
            return Err(FodsError::dims(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(FodsError::dims(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if alpha.len() != n {
            return Err(FodsError::dims(format!("alpha has {} entries, expected {n}", alpha.len())));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if !all_finite(m) {
                return Err(FodsError::Config(format!("{name} has non-finite entries")));
            }
        }
        Ok(SystemModel { a, b, c, alpha })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn alpha(&self) -> &FractionalOrders {
        &self.alpha
    }

    /// State dimension n.
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension p.
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension m.
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn output(&self, x: &Vector) -> Vector {
        &self.c * x
    }

    pub(crate) fn check_state(&self, x: &Vector, what: &str) -> Result<()> {
        if x.len() != self.states() {
            return Err(FodsError::dims(format!("{what} has length {}, expected {}", x.len(), self.states())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::Config(format!("{what} has non-finite entries")));
        }
        Ok(())
    }

    pub(crate) fn check_input(&self, u: &Vector, what: &str) -> Result<()> {
        if u.len() != self.inputs() {
            return Err(FodsError::dims(format!("{what} has length {}, expected {}", u.len(), self.inputs())));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::Config(format!("{what} has non-finite entries")));
        }
        Ok(())
    }

    pub(crate) fn check_output(&self, y: &Vector, what: &str) -> Result<()> {
        if y.len() != self.outputs() {
            return Err(FodsError::dims(format!("{what} has length {}, expected {}", y.len(), self.outputs())));
        }
        Ok(())
    }
}

/// Weights `ψ(α_i, j)` and memory matrices `A_0..A_J` of a model.
///
/// `psi` holds columns `j = 0..=J+1`; the extra column is what `A_J` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    psi: Matrix,
    memory: Vec<Matrix>,
    horizon: usize,
}

impl CoefficientTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `ψ(α_channel, j)` for `j ≤ horizon + 1`.
    pub fn psi(&self, channel: usize, j: usize) -> f64 {
        self.psi[(channel, j)]
    }

    pub fn psi_table(&self) -> &Matrix {
        &self.psi
    }

    /// `D(α, j)` for `j ≤ horizon + 1`.
    pub fn d(&self, j: usize) -> Matrix {
        Matrix::from_diagonal(&self.psi.column(j).into_owned())
    }

    pub fn memory_matrices(&self) -> &[Matrix] {
        &self.memory
    }

    /// `A_j`, or `None` past the horizon.
    pub fn memory(&self, j: usize) -> Option<&Matrix> {
        self.memory.get(j)
    }

    /// `Σ_{j=0}^{k} A_j h[k-j]` over a history ending at step `k`.
    pub fn memory_sum(&self, history: &[Vector], window: Option<usize>) -> Result<Vector> {
        let needed = window.map_or(history.len(), |w| w.min(history.len()));
        if needed > self.memory.len() {
            return Err(FodsError::Precondition(format!(
                "coefficient table horizon {} too short for {} memory terms",
                self.horizon, needed
            )));
        }
        Ok(tap_sum(&self.memory, history, window))
    }

    /// CSV dump with columns `channel,j,psi` (channels counted from 1).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,j,psi\n");
        for i in 0..self.psi.nrows() {
            for j in 0..self.psi.ncols() {
                let _ = writeln!(out, "{},{},{:.16e}", i + 1, j, self.psi[(i, j)]);
            }
        }
        out
    }
}

pub fn build_coefficient_table(model: &SystemModel, horizon: usize) -> CoefficientTable {
    let n = model.states();
    let alpha = model.alpha().as_slice();
    let cols = horizon + 2;
    let mut psi = Matrix::zeros(n, cols);
    for (i, &a) in alpha.iter().enumerate() {
        psi[(i, 0)] = 1.0;
        for j in 1..cols {
            psi[(i, j)] = psi[(i, j - 1)] * (j as f64 - 1.0 - a) / j as f64;
        }
    }
    let mut memory = Vec::with_capacity(horizon + 1);
    let mut a0 = model.a().clone();
    for i in 0..n {
        a0[(i, i)] -= psi[(i, 1)];
    }
    memory.push(a0);
    for j in 1..=horizon {
        memory.push(-Matrix::from_diagonal(&psi.column(j + 1).into_owned()));
    }
    CoefficientTable { psi, memory, horizon }
}

/// States, inputs and (optionally) outputs of a run starting at step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
    pub outputs: Option<Vec<Vector>>,
}

impl Trajectory {
    /// Number of transitions K (states has K+1 entries).
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }
}

/// Propagators `G_0..G_K` of the closed-form solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSet {
    pub g: Vec<Matrix>,
}

pub fn propagators(model: &SystemModel, steps: usize) -> PropagatorSet {
    let table = build_coefficient_table(model, steps.saturating_sub(1));
    propagators_from_table(&table, model.states(), steps)
}

pub(crate) fn propagators_from_table(table: &CoefficientTable, n: usize, steps: usize) -> PropagatorSet {
    let mut g: Vec<Matrix> = Vec::with_capacity(steps + 1);
    g.push(Matrix::identity(n, n));
    for k in 1..=steps {
        let mut acc = Matrix::zeros(n, n);
        for j in 0..k {
            acc.gemm(1.0, &table.memory_matrices()[j], &g[k - 1 - j], 1.0);
        }
        g.push(acc);
    }
    PropagatorSet { g }
}

/// Full-memory simulation.
pub fn simulate(model: &SystemModel, x0: &Vector, inputs: &[Vector]) -> Result<Trajectory> {
    simulate_windowed(model, x0, inputs, None)
}

/// Simulation with the memory sum optionally limited to the last `window` terms.
pub fn simulate_windowed(
    model: &SystemModel,
    x0: &Vector,
    inputs: &[Vector],
    window: Option<usize>,
) -> Result<Trajectory> {
    model.check_state(x0, "x0")?;
    if window == Some(0) {
        return Err(FodsError::Config("memory window must be at least 1".into()));
    }
    for (k, u) in inputs.iter().enumerate() {
        model.check_input(u, &format!("u[{k}]"))?;
    }
    let steps = inputs.len();
    let table = build_coefficient_table(model, steps.saturating_sub(1));
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.clone());
    for (k, u) in inputs.iter().enumerate() {
        let mut next = table.memory_sum(&states, window)?;
        next.gemv(1.0, model.b(), u, 1.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(FodsError::NumericOverflow { step: k + 1, what: "plant state" });
        }
        states.push(next);
    }
    let outputs = states.iter().map(|x| model.output(x)).collect();
    Ok(Trajectory { states, inputs: inputs.to_vec(), outputs: Some(outputs) })
}

/// `x[k] = G_k x[0] + Σ_{j=0}^{k-1} G_{k-1-j} B u[j]`.
pub fn closed_form_state(model: &SystemModel, x0: &Vector, inputs: &[Vector], k: usize) -> Result<Vector> {
    model.check_state(x0, "x0")?;
    if k > inputs.len() {
        return Err(FodsError::Precondition(format!("step {k} exceeds the {} supplied inputs", inputs.len())));
    }
    for (j, u) in inputs.iter().take(k).enumerate() {
        model.check_input(u, &format!("u[{j}]"))?;
    }
    let props = propagators(model, k);
    Ok(closed_form_from(&props, model, x0, inputs, k))
}

pub(crate) fn closed_form_from(props: &PropagatorSet, model: &SystemModel, x0: &Vector, inputs: &[Vector], k: usize) -> Vector {
    let mut x = &props.g[k] * x0;
    for (j, u) in inputs.iter().take(k).enumerate() {
        let bu = model.b() * u;
        x.gemv(1.0, &props.g[k - 1 - j], &bu, 1.0);
    }
    x
}
