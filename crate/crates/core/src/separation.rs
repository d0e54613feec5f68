//! Finite block-Toeplitz truncations of the closed-loop operator.
//!
//! Stacking `x[0..N)` and `e[0..N)` the coupled plant and error recursions
//! read
//!
//! ```text
//! [S X]   [J1  J2] [X]
//! [S E] = [ 0  J3] [E]
//! ```
//!
//! with block lower-triangular Toeplitz `J1 = T(A_j + B F_j)`,
//! `J2 = T(-B F_j)` and `J3` built from `A_0 - LC` on the diagonal and
//! `A_j - LC` below it. The zero block makes the spectrum of the assembled
//! operator the union of the spectra of `J1` (feedback only) and `J3`
//! (observer only).

use std::fmt::Write as _;

use nalgebra::Complex;

use crate::error::{FodsError, Result};
use crate::feedback::{closed_loop_simulate, error_residual, FeedbackGains};
use crate::frac::{build_coefficient_table, CoefficientTable, SystemModel};
use crate::linalg::{eigenvalues, spectral_radius};
use crate::observer::ObserverGains;
use crate::{Matrix, Vector};

/// `J1`, `J2`, `J3` and the assembled operator, each truncated to N blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationBlocks {
    pub j1: Matrix,
    pub j2: Matrix,
    pub j3: Matrix,
    pub assembled: Matrix,
    pub block_order: usize,
}

fn lower_toeplitz(blocks: &[Matrix], order: usize) -> Matrix {
    let n = blocks[0].nrows();
    let mut out = Matrix::zeros(order * n, order * n);
    for i in 0..order {
        for k in 0..=i {
            out.view_mut((i * n, k * n), (n, n)).copy_from(&blocks[i - k]);
        }
    }
    out
}

/// Builds the truncations.
///
/// With `memory_gains` off the observer must carry a single gain `L` and
/// every block of `J3` subtracts `LC`. With it on, block `j` subtracts
/// `L_j C` (zero past the stored gains).
pub fn toeplitz_truncation(
    table: &CoefficientTable,
    b: &Matrix,
    c: &Matrix,
    fgains: &FeedbackGains,
    ogains: &ObserverGains,
    order: usize,
    memory_gains: bool,
) -> Result<TruncationBlocks> {
    if order == 0 {
        return Err(FodsError::Config("truncation order must be at least 1".into()));
    }
    if table.memory_matrices().len() < order {
        return Err(FodsError::Precondition(format!(
            "coefficient table horizon {} too short for {order} blocks",
            table.horizon()
        )));
    }
    if !memory_gains && !ogains.is_single() {
        return Err(FodsError::Config(format!(
            "truncation without memory gains needs a single observer gain, got {}",
            ogains.gains().len()
        )));
    }
    let a = &table.memory_matrices()[..order];
    let n = a[0].nrows();
    if b.nrows() != n || c.ncols() != n {
        return Err(FodsError::dims("B or C does not match the table state dimension"));
    }
    let bf: Vec<Matrix> = (0..order)
        .map(|j| fgains.gains().get(j).map_or_else(|| Matrix::zeros(n, n), |f| b * f))
        .collect();
    let lc: Vec<Matrix> = (0..order)
        .map(|j| {
            let l = if memory_gains { ogains.gain(j) } else { ogains.gain(0) };
            l.map_or_else(|| Matrix::zeros(n, n), |l| l * c)
        })
        .collect();
    if bf[0].shape() != (n, n) || lc[0].shape() != (n, n) {
        return Err(FodsError::dims("feedback or observer gains do not match the model"));
    }

    let j1 = lower_toeplitz(&a.iter().zip(&bf).map(|(a, bf)| a + bf).collect::<Vec<_>>(), order);
    let j2 = lower_toeplitz(&bf.iter().map(|m| -m).collect::<Vec<_>>(), order);
    let j3 = lower_toeplitz(&a.iter().zip(&lc).map(|(a, lc)| a - lc).collect::<Vec<_>>(), order);
    let size = order * n;
    let mut assembled = Matrix::zeros(2 * size, 2 * size);
    assembled.view_mut((0, 0), (size, size)).copy_from(&j1);
    assembled.view_mut((0, size), (size, size)).copy_from(&j2);
    assembled.view_mut((size, size), (size, size)).copy_from(&j3);
    Ok(TruncationBlocks { j1, j2, j3, assembled, block_order: order })
}

/// Strongly connected components of the nonzero pattern of `m`.
fn irreducible_blocks(m: &Matrix) -> Vec<Vec<usize>> {
    struct Tarjan<'a> {
        m: &'a Matrix,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }

    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for w in 0..self.m.ncols() {
                if w == v || self.m[(v, w)] == 0.0 {
                    continue;
                }
                match self.index[w] {
                    None => {
                        self.visit(w);
                        self.low[v] = self.low[v].min(self.low[w]);
                    }
                    Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                    Some(_) => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut comp = Vec::new();
                while let Some(w) = self.stack.pop() {
                    self.on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                self.out.push(comp);
            }
        }
    }

    let n = m.nrows();
    let mut t = Tarjan {
        m,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.out
}

/// Eigenvalues with algebraic multiplicity.
///
/// The matrix is first split into irreducible diagonal blocks by a symmetric
/// permutation (strongly connected components of its nonzero pattern); each
/// block is then handed to a dense Schur solver. Block-triangular inputs
/// therefore never mix eigenvalues of different diagonal blocks.
pub fn spectrum(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    if !m.is_square() {
        return Err(FodsError::dims(format!("spectrum of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let mut out = Vec::with_capacity(m.nrows());
    for comp in irreducible_blocks(m) {
        let sub = m.select_rows(&comp).select_columns(&comp);
        out.extend(eigenvalues(&sub)?);
    }
    Ok(out)
}

/// Eigenvalues from one dense Schur decomposition of the whole matrix.
pub fn spectrum_dense(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    eigenvalues(m)
}

fn cmp_complex(a: &Complex<f64>, b: &Complex<f64>) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Largest distance under greedy nearest-neighbour pairing of two multisets.
///
/// Both sides are sorted by (real, imaginary) part first. Multisets of
/// different size give `f64::INFINITY`.
pub fn pairing_mismatch(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(cmp_complex);
    b.sort_by(cmp_complex);
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in &a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Outcome of a spectral separation check.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub block_order: usize,
    pub states: usize,
    pub spectrum_assembled: Vec<Complex<f64>>,
    pub spectrum_union: Vec<Complex<f64>>,
    /// Pairing mismatch between the assembled spectrum and the block union.
    pub max_mismatch: f64,
    /// Pairing mismatch of `spec(J1)` against `eig(A_0 + B F_0)` repeated N times.
    pub j1_diagonal_mismatch: f64,
    /// Pairing mismatch of `spec(J3)` against `eig(A_0 - L_0 C)` repeated N times.
    pub j3_diagonal_mismatch: f64,
    pub rho_j1_block: f64,
    pub rho_j3_block: f64,
    /// Largest residual of the autonomous error recursion along a coupled run of N steps.
    pub error_recursion_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SeparationReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "separation check");
        let _ = writeln!(s, "block order N      : {}", self.block_order);
        let _ = writeln!(s, "state dimension n  : {}", self.states);
        let _ = writeln!(s, "eigenvalues        : {}", self.spectrum_assembled.len());
        let _ = writeln!(s, "max mismatch       : {:.6e}", self.max_mismatch);
        let _ = writeln!(s, "J1 diagonal check  : {:.6e}", self.j1_diagonal_mismatch);
        let _ = writeln!(s, "J3 diagonal check  : {:.6e}", self.j3_diagonal_mismatch);
        let _ = writeln!(s, "rho(A0 + B F0)     : {:.6e}", self.rho_j1_block);
        let _ = writeln!(s, "rho(A0 - L C)      : {:.6e}", self.rho_j3_block);
        let _ = writeln!(s, "error recursion    : {:.6e}", self.error_recursion_residual);
        let _ = writeln!(s, "tolerance          : {:.6e}", self.tolerance);
        let _ = writeln!(s, "result             : {}", if self.pass { "pass" } else { "fail" });
        s
    }

    pub fn to_csv(&self) -> String {
        format!(
            "N,n,max_mismatch,pass,rho_j1_block,rho_j3_block\n{},{},{:.16e},{},{:.16e},{:.16e}\n",
            self.block_order,
            self.states,
            self.max_mismatch,
            self.pass,
            self.rho_j1_block,
            self.rho_j3_block
        )
    }
}

fn repeated(values: Vec<Complex<f64>>, times: usize) -> Vec<Complex<f64>> {
    (0..times).flat_map(|_| values.iter().copied()).collect()
}

/// Compares `spec(J)` with `spec(J1) ⊎ spec(J3)` on an N-block truncation.
pub fn verify_separation(
    model: &SystemModel,
    fgains: &FeedbackGains,
    ogains: &ObserverGains,
    order: usize,
    tol: f64,
) -> Result<SeparationReport> {
    let table = build_coefficient_table(model, order.saturating_sub(1));
    let blocks = toeplitz_truncation(&table, model.b(), model.c(), fgains, ogains, order, false)?;
    let full = spectrum(&blocks.assembled)?;
    let mut union = spectrum(&blocks.j1)?;
    let s3 = spectrum(&blocks.j3)?;
    let max_mismatch = pairing_mismatch(&full, &[union.clone(), s3.clone()].concat());

    let n = model.states();
    let d1 = blocks.j1.view((0, 0), (n, n)).into_owned();
    let d3 = blocks.j3.view((0, 0), (n, n)).into_owned();
    let j1_diagonal_mismatch = pairing_mismatch(&union, &repeated(eigenvalues(&d1)?, order));
    let j3_diagonal_mismatch = pairing_mismatch(&s3, &repeated(eigenvalues(&d3)?, order));

    let x0 = Vector::from_element(n, 1.0);
    let trace = closed_loop_simulate(model, fgains, ogains, &x0, &Vector::zeros(n), order)?;
    let error_recursion_residual = error_residual(model, ogains, &trace);

    union.extend(s3);
    Ok(SeparationReport {
        block_order: order,
        states: n,
        spectrum_assembled: full,
        spectrum_union: union,
        max_mismatch,
        j1_diagonal_mismatch,
        j3_diagonal_mismatch,
        rho_j1_block: spectral_radius(&d1)?,
        rho_j3_block: spectral_radius(&d3)?,
        error_recursion_residual,
        tolerance: tol,
        pass: max_mismatch <= tol,
    })
}
