use crate::error::{FodsError, Result};
use crate::frac::CoefficientTable;
use crate::linalg::tap_sum;
use crate::{Matrix, Vector};

/// Predictor `x[k+1] = Σ_{j<p} A_j x[k-j] + B u[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvarModel {
    pub coeffs: Vec<Matrix>,
    pub input_map: Matrix,
}

impl MvarModel {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn states(&self) -> usize {
        self.input_map.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.input_map.ncols()
    }
}

/// Past states, oldest first; the last entry is the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistory {
    states: Vec<Vector>,
}

impl StateHistory {
    pub fn new(states: Vec<Vector>) -> Result<Self> {
        if states.is_empty() {
            return Err(FodsError::Precondition("state history is empty".into()));
        }
        Ok(StateHistory { states })
    }

    /// The last `depth` entries of `states` (all of them if fewer).
    pub fn tail(states: &[Vector], depth: usize) -> Result<Self> {
        Self::new(states[states.len().saturating_sub(depth)..].to_vec())
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }
}

/// Keeps `A_0..A_{p-1}` of the table.
pub fn mvar_truncate(table: &CoefficientTable, b: &Matrix, order: usize) -> Result<MvarModel> {
    if order == 0 {
        return Err(FodsError::Config("MVAR order must be at least 1".into()));
    }
    if order > table.memory_matrices().len() {
        return Err(FodsError::Config(format!(
            "MVAR order {order} exceeds coefficient table horizon {}",
            table.horizon()
        )));
    }
    let n = table.memory_matrices()[0].nrows();
    if b.nrows() != n {
        return Err(FodsError::dims(format!("B has {} rows, expected {n}", b.nrows())));
    }
    Ok(MvarModel { coeffs: table.memory_matrices()[..order].to_vec(), input_map: b.clone() })
}

/// Rolls the predictor forward, one step per input.
pub fn predict(mvar: &MvarModel, history: &StateHistory, inputs: &[Vector]) -> Result<Vec<Vector>> {
    let n = mvar.states();
    if let Some(x) = history.states().iter().find(|x| x.len() != n) {
        return Err(FodsError::dims(format!("history state has length {}, expected {n}", x.len())));
    }
    if let Some(u) = inputs.iter().find(|u| u.len() != mvar.inputs()) {
        return Err(FodsError::dims(format!("input has length {}, expected {}", u.len(), mvar.inputs())));
    }
    let keep = mvar.order();
    let hist = history.states();
    let mut buf: Vec<Vector> = hist[hist.len().saturating_sub(keep)..].to_vec();
    let mut out = Vec::with_capacity(inputs.len());
    for u in inputs {
        let mut next = tap_sum(&mvar.coeffs, &buf, None);
        next.gemv(1.0, &mvar.input_map, u, 1.0);
        out.push(next.clone());
        buf.push(next);
        if buf.len() > keep {
            buf.remove(0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac::{build_coefficient_table, simulate, FractionalOrders, SystemModel};
    use approx::assert_abs_diff_eq;

    fn scalar() -> SystemModel {
        SystemModel::new(
            Matrix::zeros(1, 1),
            Matrix::identity(1, 1),
            Matrix::identity(1, 1),
            FractionalOrders::new(vec![0.5]).unwrap(),
        )
        .unwrap()
    }

    fn v(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    #[test]
    fn scalar_two_tap_prediction() {
        let m = scalar();
        let t = build_coefficient_table(&m, 4);
        let mvar = mvar_truncate(&t, m.b(), 2).unwrap();
        let h = StateHistory::new(vec![v(1.0)]).unwrap();
        let p = predict(&mvar, &h, &[v(0.0), v(0.0)]).unwrap();
        assert_abs_diff_eq!(p[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1][0], 0.375, epsilon = 1e-15);
        assert!(predict(&mvar, &h, &[]).unwrap().is_empty());
    }

    #[test]
    fn one_tap_is_a0() {
        let m = scalar();
        let t = build_coefficient_table(&m, 4);
        let mvar = mvar_truncate(&t, m.b(), 1).unwrap();
        assert_eq!(mvar.coeffs, vec![t.memory(0).unwrap().clone()]);
        let p = predict(&mvar, &StateHistory::new(vec![v(1.0)]).unwrap(), &vec![v(0.0); 3]).unwrap();
        assert_abs_diff_eq!(p[2][0], 0.125, epsilon = 1e-15);
    }

    #[test]
    fn long_order_matches_fods() {
        let m = scalar();
        let t = build_coefficient_table(&m, 12);
        let mvar = mvar_truncate(&t, m.b(), 12).unwrap();
        let u: Vec<Vector> = (0..10).map(|k| v((k as f64).sin())).collect();
        let p = predict(&mvar, &StateHistory::new(vec![v(0.3)]).unwrap(), &u).unwrap();
        let x = simulate(&m, &v(0.3), &u).unwrap();
        for (a, b) in p.iter().zip(&x.states[1..]) {
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-15);
        }
    }

    #[test]
    fn errors() {
        let m = scalar();
        let t = build_coefficient_table(&m, 2);
        assert!(mvar_truncate(&t, m.b(), 0).is_err());
        assert!(mvar_truncate(&t, m.b(), 4).is_err());
        assert!(mvar_truncate(&t, m.b(), 3).is_ok());
        assert!(StateHistory::new(vec![]).is_err());
    }
}
