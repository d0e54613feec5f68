//! Shared fixtures for the benchmarks.

use fods_core::presets::paper_model;
use fods_core::{build_coefficient_table, design_feedback_gain, design_observer_gain, FeedbackGains, ObserverGains, SystemModel, Vector};

/// Paper model with observer and feedback gains placed at radius 0.5.
pub fn paper_fixture() -> (SystemModel, FeedbackGains, ObserverGains) {
    let model = paper_model();
    let table = build_coefficient_table(&model, 1);
    let f = design_feedback_gain(&table, model.b(), 0.5).expect("feedback design");
    let l = design_observer_gain(&table, model.c(), 0.5).expect("observer design");
    (model, FeedbackGains::memoryless(f), ObserverGains::single(l))
}

/// Deterministic bounded input sequence.
pub fn sine_inputs(steps: usize) -> Vec<Vector> {
    (0..steps).map(|k| Vector::from_element(1, (0.3 * k as f64).sin())).collect()
}
