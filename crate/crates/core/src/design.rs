//! Spectral-radius targeted gain synthesis for `A + B F`.
//!
//! Observer gains reuse the same routine on the transposed pair
//! `(Aᵀ, Cᵀ)`. Strategy, in order:
//!
//! 1. `B` of full row rank: `F = -B⁺A`, so `A + BF = 0`.
//! 2. single input and controllable: Ackermann's formula; open-loop
//!    eigenvalues outside the target are pulled radially just inside it.
//! 3. otherwise: discrete Riccati iteration on `(A/r, B)`; the resulting LQR
//!    gain makes `A/r - BK` Schur stable, hence `ρ(A - rBK) < r`.
//!
//! Every result is checked against the target before it is returned.

use nalgebra::Complex;

use crate::error::{FodsError, Result};
use crate::linalg::{eigenvalues, rank, spectral_radius};
use crate::Matrix;

/// Slack on the returned spectral radius.
pub const RADIUS_SLACK: f64 = 1e-9;

const RANK_TOL: f64 = 1e-10;

/// Fraction of the target radius used for the outermost placed pole.
const POLE_MARGIN: f64 = 0.9;
/// Relative gap between the circles of successive moved poles.
const POLE_SPREAD: f64 = 0.02;

/// Modes of `a` with `|λ| ≥ target` that `b` cannot shift (PBH test).
pub fn unshiftable_modes(a: &Matrix, b: &Matrix, target: f64) -> Result<Vec<Complex<f64>>> {
    let n = a.nrows();
    let mut bad = Vec::new();
    for lambda in eigenvalues(a)? {
        if lambda.norm() < target {
            continue;
        }
        // [A - λI, B] must have full row rank.
        let mut pbh = nalgebra::DMatrix::<Complex<f64>>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                pbh[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            pbh[(i, i)] -= lambda;
            for j in 0..b.ncols() {
                pbh[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let sv = pbh.singular_values();
        let scale = 1.0 + a.norm() + b.norm();
        let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if sv.len() < n || smallest <= 1e-8 * scale {
            bad.push(lambda);
        }
    }
    Ok(bad)
}

pub(crate) fn format_modes(modes: &[Complex<f64>]) -> String {
    let parts: Vec<String> = modes
        .iter()
        .map(|z| if z.im == 0.0 { format!("{:.6}", z.re) } else { format!("{:.6}{:+.6}i", z.re, z.im) })
        .collect();
    parts.join(", ")
}

/// Returns `F` with `ρ(A + B F) ≤ target`.
pub fn place_radius(a: &Matrix, b: &Matrix, target: f64) -> Result<Matrix> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(FodsError::dims(format!(
            "gain design needs square A and matching B, got A {}x{}, B {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if !target.is_finite() || target < 0.0 {
        return Err(FodsError::Config(format!("target radius {target} must be finite and non-negative")));
    }
    if spectral_radius(a)? <= target {
        return Ok(Matrix::zeros(b.ncols(), n));
    }
    let bad = unshiftable_modes(a, b, target)?;
    if !bad.is_empty() {
        return Err(FodsError::Design(format!(
            "modes outside radius {target} cannot be moved: {}",
            format_modes(&bad)
        )));
    }

    let f = if rank(b, RANK_TOL) == n {
        let pinv = b
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| FodsError::Design(format!("pseudo-inverse failed: {e}")))?;
        -(pinv * a)
    } else if b.ncols() == 1 && rank(&controllability(a, b), RANK_TOL) == n {
        if target == 0.0 {
            return Err(FodsError::Design(
                "deadbeat placement needs an input map of full row rank".into(),
            ));
        }
        let poles = target_poles(a, target)?;
        ackermann(a, b, &poles)?
    } else {
        if target == 0.0 {
            return Err(FodsError::Design(
                "deadbeat placement needs an input map of full row rank".into(),
            ));
        }
        riccati_gain(a, b, target)?
    };

    let achieved = spectral_radius(&(a + b * &f))?;
    if achieved > target + RADIUS_SLACK {
        return Err(FodsError::Design(format!("placement reached radius {achieved:.3e}, target {target}")));
    }
    Ok(f)
}

fn controllability(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut ctrb = Matrix::zeros(n, n * b.ncols());
    let mut block = b.clone();
    for i in 0..n {
        ctrb.columns_mut(i * b.ncols(), b.ncols()).copy_from(&block);
        block = a * block;
    }
    ctrb
}

/// Open-loop eigenvalues outside `POLE_MARGIN · target` are pulled radially
/// onto slightly different circles just inside it; the rest stay put.
fn target_poles(a: &Matrix, target: f64) -> Result<Vec<Complex<f64>>> {
    let limit = POLE_MARGIN * target;
    let eig = eigenvalues(a)?;
    let mut poles: Vec<Complex<f64>> = eig.iter().copied().filter(|z| z.norm() <= limit).collect();
    let mut moved: Vec<Complex<f64>> = eig.into_iter().filter(|z| z.norm() > limit && z.im >= 0.0).collect();
    moved.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    for (i, z) in moved.into_iter().enumerate() {
        let radius = limit * (1.0 - POLE_SPREAD * i as f64).max(0.5);
        let p = z / z.norm() * radius;
        poles.push(p);
        if z.im > 0.0 {
            poles.push(p.conj());
        }
    }
    Ok(poles)
}

/// Real coefficients `c_0..c_n` (monic, `c_n = 1`) of `Π (s - λ_i)`.
fn poly_from_roots(roots: &[Complex<f64>]) -> Vec<f64> {
    let mut c = vec![Complex::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= ci * r;
        }
        c = next;
    }
    c.into_iter().map(|z| z.re).collect()
}

/// `F = -e_nᵀ 𝒞⁻¹ φ(A)` for the monic polynomial with the given roots.
fn ackermann(a: &Matrix, b: &Matrix, poles: &[Complex<f64>]) -> Result<Matrix> {
    let n = a.nrows();
    let ctrb = controllability(a, b);
    let coeffs = poly_from_roots(poles);
    let mut phi = Matrix::zeros(n, n);
    let mut power = Matrix::identity(n, n);
    for &ck in &coeffs {
        phi += &power * ck;
        power = &power * a;
    }
    let mut en = Matrix::zeros(n, 1);
    en[(n - 1, 0)] = 1.0;
    // row = e_nᵀ 𝒞⁻¹  ⇔  𝒞ᵀ rowᵀ = e_n
    let row = ctrb
        .transpose()
        .lu()
        .solve(&en)
        .ok_or_else(|| FodsError::Design("controllability matrix is singular".into()))?;
    Ok(-(row.transpose() * phi))
}

fn riccati_gain(a: &Matrix, b: &Matrix, target: f64) -> Result<Matrix> {
    let n = a.nrows();
    let p_in = b.ncols();
    let scaled = a / target;
    let q = Matrix::identity(n, n);
    let r = Matrix::identity(p_in, p_in);
    let mut p = q.clone();
    for _ in 0..100_000 {
        let btp = b.transpose() * &p;
        let s = &r + &btp * b;
        let k = s
            .clone()
            .lu()
            .solve(&(&btp * &scaled))
            .ok_or_else(|| FodsError::Design("Riccati gain system is singular".into()))?;
        let next = &q + scaled.transpose() * &p * &scaled - scaled.transpose() * p.transpose() * b * &k;
        let next = (&next + next.transpose()) * 0.5;
        let delta = (&next - &p).norm();
        let size = next.norm();
        p = next;
        if !size.is_finite() {
            break;
        }
        if delta <= 1e-13 * (1.0 + size) {
            return Ok(-(k * target));
        }
    }
    Err(FodsError::Design(format!("Riccati iteration did not converge for radius {target}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_rank_input_is_deadbeat() {
        let a = Matrix::from_row_slice(2, 2, &[0.9, 0.1, -0.2, 1.1]);
        let f = place_radius(&a, &Matrix::identity(2, 2), 0.0).unwrap();
        assert!((&a + &f).norm() < 1e-14);
    }

    #[test]
    fn single_input_ackermann() {
        let a = Matrix::from_row_slice(3, 3, &[1.2, 0.3, 0.0, 0.0, 0.8, 0.4, 0.1, 0.0, 0.95]);
        let b = Matrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]);
        let f = place_radius(&a, &b, 0.5).unwrap();
        let rho = spectral_radius(&(&a + &b * &f)).unwrap();
        assert!(rho <= 0.5 + RADIUS_SLACK, "rho = {rho}");
    }

    #[test]
    fn multi_input_riccati() {
        let a = Matrix::from_row_slice(3, 3, &[1.2, 0.3, 0.0, 0.0, 0.8, 0.4, 0.1, 0.0, 0.95]);
        let b = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let f = place_radius(&a, &b, 0.3).unwrap();
        let rho = spectral_radius(&(&a + &b * &f)).unwrap();
        assert!(rho <= 0.3 + RADIUS_SLACK, "rho = {rho}");
    }

    #[test]
    fn uncontrollable_but_stable_mode_is_tolerated() {
        // Second channel is not reachable but already inside the target.
        let a = Matrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.2]);
        let b = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let f = place_radius(&a, &b, 0.5).unwrap();
        assert!(spectral_radius(&(&a + &b * &f)).unwrap() <= 0.5 + RADIUS_SLACK);
    }

    #[test]
    fn unreachable_mode_is_named() {
        let a = Matrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.8]);
        let b = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let err = place_radius(&a, &b, 0.5).unwrap_err();
        match err {
            FodsError::Design(msg) => assert!(msg.contains("0.800000"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_input_map() {
        let a = Matrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.1]);
        assert!(place_radius(&a, &Matrix::zeros(2, 1), 0.5).is_err());
        // already inside the target: nothing to do
        let f = place_radius(&(a * 0.1), &Matrix::zeros(2, 1), 0.5).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
    }
}
