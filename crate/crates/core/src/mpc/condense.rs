use crate::error::{FodsError, Result};
use crate::{Matrix, Vector};

use super::mvar::{predict, MvarModel, StateHistory};
use super::MpcConfig;

/// Stacked prediction `x̄ = free + forced · ū` over the prediction horizon.
///
/// `ū` stacks the M moves; steps past the control horizon reuse the last
/// move.
#[derive(Debug, Clone, PartialEq)]
pub struct Condensed {
    pub free: Vector,
    pub forced: Matrix,
}

fn expand_moves(moves: &Vector, inputs: usize, control: usize, horizon: usize) -> Vec<Vector> {
    (0..horizon)
        .map(|t| moves.rows(t.min(control - 1) * inputs, inputs).into_owned())
        .collect()
}

fn stack(states: &[Vector]) -> Vector {
    let n = states.first().map_or(0, |x| x.len());
    let mut out = Vector::zeros(n * states.len());
    for (i, x) in states.iter().enumerate() {
        out.rows_mut(i * n, n).copy_from(x);
    }
    out
}

pub fn condense(mvar: &MvarModel, history: &StateHistory, config: &MpcConfig) -> Result<Condensed> {
    config.validate()?;
    let n = mvar.states();
    let p = mvar.inputs();
    let horizon = config.prediction_horizon;
    let control = config.control_horizon;
    let zeros = vec![Vector::zeros(p); horizon];
    let free = stack(&predict(mvar, history, &zeros)?);
    let quiet = StateHistory::new(vec![Vector::zeros(n)])?;
    let mut forced = Matrix::zeros(horizon * n, control * p);
    for col in 0..control * p {
        let mut unit = Vector::zeros(control * p);
        unit[col] = 1.0;
        let response = predict(mvar, &quiet, &expand_moves(&unit, p, control, horizon))?;
        forced.column_mut(col).copy_from(&stack(&response));
    }
    Ok(Condensed { free, forced })
}

/// Result of one receding-horizon solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    /// M moves, each of input dimension p.
    pub moves: Vec<Vector>,
    /// Condensed cost at the returned moves.
    pub cost: f64,
    /// Condensed cost at zero input.
    pub zero_cost: f64,
    /// Norm of the cost gradient at the returned moves.
    pub gradient_norm: f64,
}

impl MpcSolution {
    /// `‖∇J‖ ≤ 1e-8 (1 + J)` and `J(ū*) ≤ J(0)`.
    pub fn is_certified(&self) -> bool {
        self.gradient_norm <= 1e-8 * (1.0 + self.cost) && self.cost <= self.zero_cost
    }
}

/// Minimizes `‖free + forced ū - r̄‖² + λ‖ū‖²` through a QR factorization.
pub fn solve_mpc_step(mvar: &MvarModel, history: &StateHistory, ref_window: &[Vector], config: &MpcConfig) -> Result<MpcSolution> {
    let cond = condense(mvar, history, config)?;
    if ref_window.len() != config.prediction_horizon {
        return Err(FodsError::Precondition(format!(
            "reference window has {} samples, expected {}",
            ref_window.len(),
            config.prediction_horizon
        )));
    }
    if ref_window.iter().any(|r| r.len() != mvar.states()) {
        return Err(FodsError::dims("reference sample length differs from the state dimension"));
    }
    let target = stack(ref_window) - &cond.free;
    let rows = cond.forced.nrows();
    let cols = cond.forced.ncols();
    let lambda = config.regularization;

    let mut lhs = Matrix::zeros(rows + cols, cols);
    lhs.rows_mut(0, rows).copy_from(&cond.forced);
    let mut rhs = Vector::zeros(rows + cols);
    rhs.rows_mut(0, rows).copy_from(&target);
    if lambda > 0.0 {
        lhs.rows_mut(rows, cols).fill_with_identity();
        lhs.rows_mut(rows, cols).scale_mut(lambda.sqrt());
    }

    let qr = lhs.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    let threshold = 1e-12 * diag_max.max(f64::MIN_POSITIVE);
    if diag_max == 0.0 || r.diagonal().iter().any(|d| d.abs() <= threshold) {
        return Err(FodsError::Degenerate(format!(
            "stacked input map is rank deficient (regularization {lambda})"
        )));
    }
    let q = qr.q();
    let solve = |b: &Vector| -> Result<Vector> {
        r.solve_upper_triangular(&(q.transpose() * b))
            .ok_or_else(|| FodsError::Degenerate("triangular factor is singular".into()))
    };
    let mut moves = solve(&rhs)?;
    // one step of iterative refinement
    let residual = &rhs - &lhs * &moves;
    moves += solve(&residual)?;

    let cost_of = |u: &Vector| -> f64 { (&cond.forced * u - &target).norm_squared() + lambda * u.norm_squared() };
    let cost = cost_of(&moves);
    let zero_cost = target.norm_squared();
    let gradient = (cond.forced.transpose() * (&cond.forced * &moves - &target) + &moves * lambda) * 2.0;
    let p = mvar.inputs();
    Ok(MpcSolution {
        moves: (0..config.control_horizon).map(|i| moves.rows(i * p, p).into_owned()).collect(),
        cost,
        zero_cost,
        gradient_norm: gradient.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac::{build_coefficient_table, FractionalOrders, SystemModel};
    use crate::mpc::mvar_truncate;
    use approx::assert_abs_diff_eq;

    fn two_channel() -> (SystemModel, MvarModel) {
        let m = SystemModel::new(
            Matrix::from_row_slice(2, 2, &[0.05, 0.02, -0.03, 0.04]),
            Matrix::from_column_slice(2, 1, &[1.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            FractionalOrders::new(vec![0.6, 0.8]).unwrap(),
        )
        .unwrap();
        let t = build_coefficient_table(&m, 8);
        let mvar = mvar_truncate(&t, m.b(), 4).unwrap();
        (m, mvar)
    }

    fn cfg(p: usize, m: usize, lambda: f64) -> MpcConfig {
        MpcConfig { prediction_horizon: p, control_horizon: m, mvar_order: 4, regularization: lambda, sample_rate: 160.0 }
    }

    #[test]
    fn scalar_one_step() {
        let m = SystemModel::new(
            Matrix::zeros(1, 1),
            Matrix::identity(1, 1),
            Matrix::identity(1, 1),
            FractionalOrders::new(vec![0.5]).unwrap(),
        )
        .unwrap();
        let t = build_coefficient_table(&m, 0);
        let mvar = mvar_truncate(&t, m.b(), 1).unwrap();
        let h = StateHistory::new(vec![Vector::zeros(1)]).unwrap();
        let sol = solve_mpc_step(&mvar, &h, &[Vector::from_element(1, 1.0)], &cfg(1, 1, 0.0)).unwrap();
        assert_abs_diff_eq!(sol.moves[0][0], 1.0, epsilon = 1e-14);
        assert!(sol.is_certified());
    }

    #[test]
    fn free_response_reference_needs_no_input() {
        let (_, mvar) = two_channel();
        let h = StateHistory::new(vec![Vector::from_vec(vec![1.0, -1.0]), Vector::from_vec(vec![0.5, 0.2])]).unwrap();
        let c = cfg(6, 3, 1e-6);
        let free = predict(&mvar, &h, &vec![Vector::zeros(1); 6]).unwrap();
        let sol = solve_mpc_step(&mvar, &h, &free, &c).unwrap();
        assert!(sol.moves.iter().all(|u| u.amax() < 1e-12));
        assert!(sol.cost <= sol.zero_cost);
    }

    #[test]
    fn zero_moves_give_free_response() {
        let (_, mvar) = two_channel();
        let h = StateHistory::new(vec![Vector::from_vec(vec![1.0, -1.0])]).unwrap();
        let c = cfg(5, 2, 0.0);
        let cond = condense(&mvar, &h, &c).unwrap();
        let free = stack(&predict(&mvar, &h, &vec![Vector::zeros(1); 5]).unwrap());
        assert_eq!(cond.free, free);
        assert_eq!(cond.forced.shape(), (10, 2));
    }

    #[test]
    fn forced_columns_are_impulse_like_responses() {
        let (_, mvar) = two_channel();
        let quiet = StateHistory::new(vec![Vector::zeros(2)]).unwrap();
        let c = cfg(4, 4, 0.0);
        let cond = condense(&mvar, &quiet, &c).unwrap();
        assert!(cond.free.iter().all(|v| *v == 0.0));
        // move 0 only: single impulse at t = 0
        let mut u = vec![Vector::zeros(1); 4];
        u[0][0] = 1.0;
        let resp = stack(&predict(&mvar, &quiet, &u).unwrap());
        assert_abs_diff_eq!(cond.forced.column(0).into_owned(), resp, epsilon = 1e-15);
    }

    #[test]
    fn held_moves_match_predict() {
        let (_, mvar) = two_channel();
        let h = StateHistory::new(vec![Vector::from_vec(vec![0.3, 0.1]), Vector::from_vec(vec![-0.2, 0.4])]).unwrap();
        let c = cfg(7, 3, 0.0);
        let cond = condense(&mvar, &h, &c).unwrap();
        let moves = Vector::from_vec(vec![0.7, -0.4, 1.1]);
        let lifted = &cond.free + &cond.forced * &moves;
        let direct = stack(&predict(&mvar, &h, &expand_moves(&moves, 1, 3, 7)).unwrap());
        assert!((lifted - direct).amax() <= 1e-12);
    }

    #[test]
    fn rank_deficiency_without_regularization() {
        let (_, mut mvar) = two_channel();
        mvar.input_map = Matrix::zeros(2, 1);
        let h = StateHistory::new(vec![Vector::zeros(2)]).unwrap();
        let refs = vec![Vector::from_element(2, 1.0); 3];
        let err = solve_mpc_step(&mvar, &h, &refs, &cfg(3, 2, 0.0)).unwrap_err();
        assert!(matches!(err, FodsError::Degenerate(_)));
        let sol = solve_mpc_step(&mvar, &h, &refs, &cfg(3, 2, 1e-6)).unwrap();
        assert!(sol.moves.iter().all(|u| u.amax() < 1e-12));
    }

    #[test]
    fn window_length_is_checked() {
        let (_, mvar) = two_channel();
        let h = StateHistory::new(vec![Vector::zeros(2)]).unwrap();
        assert!(solve_mpc_step(&mvar, &h, &[Vector::zeros(2)], &cfg(3, 2, 0.0)).is_err());
    }
}
