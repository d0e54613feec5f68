//! Small dense helpers shared by the recursions and designs.

use nalgebra::Complex;

use crate::error::{FodsError, Result};
use crate::{Matrix, Vector};

/// Causal convolution `Σ_j taps[j] · history[k - j]` with `k = history.len() - 1`.
///
/// Terms run for `j < min(taps.len(), history.len(), window)`. An empty
/// history yields an empty vector of the tap row dimension.
pub fn tap_sum(taps: &[Matrix], history: &[Vector], window: Option<usize>) -> Vector {
    let rows = taps.first().map_or(0, |t| t.nrows());
    let mut acc = Vector::zeros(rows);
    let mut terms = taps.len().min(history.len());
    if let Some(w) = window {
        terms = terms.min(w);
    }
    for (j, tap) in taps.iter().take(terms).enumerate() {
        acc.gemv(1.0, tap, &history[history.len() - 1 - j], 1.0);
    }
    acc
}

/// Eigenvalues of a square real matrix through the real Schur form.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    if !m.is_square() {
        return Err(FodsError::dims(format!("eigenvalues of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(FodsError::Eigen("matrix has non-finite entries".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, 100_000)
        .ok_or_else(|| FodsError::Eigen(format!("Schur iteration did not converge ({}x{})", m.nrows(), m.ncols())))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn max_abs_diff(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Numerical rank from singular values, relative to the largest one.
pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tap_sum_respects_history_and_window() {
        let taps = vec![Matrix::identity(1, 1) * 2.0, Matrix::identity(1, 1) * 3.0];
        let hist = vec![Vector::from_element(1, 1.0), Vector::from_element(1, 10.0)];
        // 2*10 + 3*1
        assert_eq!(tap_sum(&taps, &hist, None)[0], 23.0);
        assert_eq!(tap_sum(&taps, &hist, Some(1))[0], 20.0);
        assert_eq!(tap_sum(&taps, &hist[..1], None)[0], 2.0);
    }

    #[test]
    fn radius_of_rotation() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(&m).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        assert!(eigenvalues(&Matrix::zeros(2, 3)).is_err());
    }
}
