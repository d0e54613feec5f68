//! Built-in models.

use crate::frac::{FractionalOrders, SystemModel};
use crate::Matrix;

/// Coupling matrix identified from a 4-channel, 1 s window of normalized
/// scalp EEG (CHB-MIT, subject 11), row-major.
pub const PAPER_A: [[f64; 4]; 4] = [
    [0.0350, 0.0526, -0.0034, -0.0391],
    [0.0296, -0.0496, 0.0646, 0.0610],
    [-0.0103, -0.0028, -0.0091, 0.0068],
    [-0.0291, 0.0143, -0.0008, 0.0394],
];

/// Fractional orders identified for the same recording.
pub const PAPER_ALPHA: [f64; 4] = [0.5945, 0.7176, 0.9603, 0.6279];

/// Uniform stimulation of all four channels.
pub const PAPER_B: [f64; 4] = [1.0, 1.0, 1.0, 1.0];

/// Only the first channel is measured.
pub const PAPER_C: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

/// Sample rate implied by an 8-step horizon lasting 50 ms.
pub const PAPER_SAMPLE_RATE: f64 = 160.0;
pub const PAPER_PREDICTION_HORIZON: usize = 8;
pub const PAPER_CONTROL_HORIZON: usize = 4;

/// The EEG-identified 4-channel model.
pub fn paper_model() -> SystemModel {
    let a = Matrix::from_fn(4, 4, |i, j| PAPER_A[i][j]);
    let b = Matrix::from_column_slice(4, 1, &PAPER_B);
    let c = Matrix::from_row_slice(1, 4, &PAPER_C);
    let alpha = FractionalOrders::new(PAPER_ALPHA.to_vec()).expect("orders lie in (0, 2)");
    SystemModel::new(a, b, c, alpha).expect("preset dimensions are consistent")
}

/// `A = 0`, `B = C = 1`, `α = 0.5`: the smallest model with visible memory.
pub fn scalar_model() -> SystemModel {
    SystemModel::new(
        Matrix::zeros(1, 1),
        Matrix::identity(1, 1),
        Matrix::identity(1, 1),
        FractionalOrders::new(vec![0.5]).expect("0.5 lies in (0, 2)"),
    )
    .expect("preset dimensions are consistent")
}
