//! Runs a validated experiment and writes its artifacts.

use std::path::{Path, PathBuf};

use fods_core::mpc::{tracking_rms, zero_input_baseline};
use fods_core::{
    build_coefficient_table, closed_loop_simulate, design_feedback_gain, design_observer_gain, observer_step_memory,
    run_mpc_closed_loop, simulate, square_wave_reference, verify_separation, EstimateHistory, FeedbackGains,
    ObserverGains, SystemModel, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentSpec, GainSource, InitialState, InputKind, ScenarioKind};
use crate::error::CliError;
use crate::svg::render_svg;
use crate::trace::{TraceSignals, TraceTable};

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Scalar results worth printing, e.g. tracking RMS.
    pub metrics: Vec<(String, f64)>,
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, amplitude: f64) -> Vector {
    let a = amplitude.abs();
    if a == 0.0 {
        return Vector::zeros(n);
    }
    Vector::from_iterator(n, (0..n).map(|_| rng.random_range(-a..a)))
}

pub fn observer_gains(spec: &ExperimentSpec) -> Result<ObserverGains, CliError> {
    match &spec.observer {
        GainSource::Design(r) => {
            let table = build_coefficient_table(&spec.model, 1);
            Ok(ObserverGains::single(design_observer_gain(&table, spec.model.c(), *r)?))
        }
        GainSource::Explicit(list) => Ok(ObserverGains::new(list.clone())?),
    }
}

pub fn feedback_gains(spec: &ExperimentSpec) -> Result<FeedbackGains, CliError> {
    match &spec.feedback {
        GainSource::Design(r) => {
            let table = build_coefficient_table(&spec.model, 1);
            Ok(FeedbackGains::memoryless(design_feedback_gain(&table, spec.model.b(), *r)?))
        }
        GainSource::Explicit(list) => Ok(FeedbackGains::new(list.clone())?),
    }
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    files.push(path.clone());
    Ok(path)
}

fn observe(model: &SystemModel, gains: &ObserverGains, states: &[Vector], inputs: &[Vector], xhat0: &Vector) -> Result<Vec<Vector>, CliError> {
    let table = build_coefficient_table(model, inputs.len().saturating_sub(1));
    let outputs: Vec<Vector> = states.iter().map(|x| model.output(x)).collect();
    let mut est = EstimateHistory::new(model, xhat0.clone())?;
    for _ in 0..inputs.len() {
        let next = observer_step_memory(model, &table, gains, &est, inputs, &outputs)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(fods_core::FodsError::NumericOverflow { step: est.step() + 1, what: "state estimate" }.into());
        }
        est.push(model, next);
    }
    Ok(est.into_estimates())
}

/// Runs `spec`, writing every artifact into `spec.out_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let dir = &spec.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let model = &spec.model;
    let n = model.states();
    let k_max = spec.horizon;
    let fs = spec.mpc.sample_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x0 = match &spec.x0 {
        InitialState::Given(v) => v.clone(),
        InitialState::Random(a) => uniform(&mut rng, n, *a),
    };
    let mut out = RunOutput::default();
    let name = spec.scenario.name();

    let table = match spec.scenario {
        ScenarioKind::Coeffs => {
            write(dir, "coefficients.csv", &build_coefficient_table(model, k_max).to_csv(), &mut out.files)?;
            None
        }
        ScenarioKind::Simulate | ScenarioKind::Observe => {
            let inputs: Vec<Vector> = (0..k_max)
                .map(|_| match spec.input_kind {
                    InputKind::Zero => Vector::zeros(model.inputs()),
                    InputKind::Random => uniform(&mut rng, model.inputs(), spec.input_amplitude),
                })
                .collect();
            let traj = simulate(model, &x0, &inputs)?;
            let outputs: Vec<Vector> = traj.states.iter().map(|x| model.output(x)).collect();
            let estimates = if spec.scenario == ScenarioKind::Observe {
                Some(observe(model, &observer_gains(spec)?, &traj.states, &inputs, &spec.xhat0)?)
            } else {
                None
            };
            Some(TraceTable::from_signals(
                &TraceSignals {
                    states: &traj.states,
                    estimates: estimates.as_deref(),
                    inputs: Some(&inputs),
                    outputs: Some(&outputs),
                    reference: None,
                },
                fs,
            ))
        }
        ScenarioKind::Closedloop => {
            let trace = closed_loop_simulate(model, &feedback_gains(spec)?, &observer_gains(spec)?, &x0, &spec.xhat0, k_max)?;
            Some(TraceTable::from_signals(
                &TraceSignals {
                    states: &trace.plant_states,
                    estimates: Some(&trace.estimates),
                    inputs: Some(&trace.inputs),
                    outputs: Some(&trace.outputs),
                    reference: None,
                },
                fs,
            ))
        }
        ScenarioKind::Mpc => {
            let reference = square_wave_reference(
                spec.reference_frequency,
                fs,
                spec.reference_amplitude,
                k_max + spec.mpc.prediction_horizon + 1,
                n,
            )?;
            let run = run_mpc_closed_loop(model, &spec.mpc, &observer_gains(spec)?, &reference, k_max, &x0, &spec.xhat0)?;
            let baseline = zero_input_baseline(model, &x0, k_max)?;
            let rms = tracking_rms(&run.trace.plant_states, &reference);
            let rms0 = tracking_rms(&baseline, &reference);
            let worst = run
                .solves
                .iter()
                .map(|s| s.gradient_norm / (1.0 + s.cost))
                .fold(0.0, f64::max);
            let mut summary = String::new();
            summary.push_str(&format!("steps              : {k_max}\n"));
            summary.push_str(&format!("solves             : {}\n", run.solves.len()));
            summary.push_str(&format!("rms_mpc            : {rms:.6e}\n"));
            summary.push_str(&format!("rms_zero_input     : {rms0:.6e}\n"));
            summary.push_str(&format!("ratio              : {:.6e}\n", rms / rms0));
            summary.push_str(&format!("max_gradient_ratio : {worst:.6e}\n"));
            for ch in 0..n {
                let sq: f64 = run.trace.plant_states.iter().zip(&reference.samples).skip(1).map(|(x, r)| (x[ch] - r[ch]).powi(2)).sum();
                let rms_ch = (sq / k_max.max(1) as f64).sqrt();
                summary.push_str(&format!("rms_channel_{}      : {rms_ch:.6e}\n", ch + 1));
            }
            write(dir, "mpc_summary.txt", &summary, &mut out.files)?;
            out.metrics.push(("rms_mpc".into(), rms));
            out.metrics.push(("rms_zero_input".into(), rms0));
            out.metrics.push(("ratio".into(), rms / rms0));
            Some(TraceTable::from_signals(
                &TraceSignals {
                    states: &run.trace.plant_states,
                    estimates: Some(&run.trace.estimates),
                    inputs: Some(&run.trace.inputs),
                    outputs: Some(&run.trace.outputs),
                    reference: Some(&reference),
                },
                fs,
            ))
        }
        ScenarioKind::VerifySeparation => {
            let report = verify_separation(
                model,
                &feedback_gains(spec)?,
                &observer_gains(spec)?,
                spec.block_order,
                spec.separation_tolerance,
            )?;
            write(dir, "separation.txt", &report.to_text(), &mut out.files)?;
            write(dir, "separation.csv", &report.to_csv(), &mut out.files)?;
            out.metrics.push(("max_mismatch".into(), report.max_mismatch));
            None
        }
    };

    if let Some(table) = table {
        write(dir, &format!("{name}.csv"), &table.to_csv(), &mut out.files)?;
        if spec.svg {
            let channels = spec.channels.clone().unwrap_or_else(|| {
                ["x1", "xhat1", "ref1"]
                    .iter()
                    .filter(|c| table.header.iter().any(|h| h == *c))
                    .map(|c| c.to_string())
                    .collect()
            });
            write(dir, &format!("{name}.svg"), &render_svg(&table, &channels)?, &mut out.files)?;
        }
    }
    Ok(out)
}

/// Runs several experiments concurrently; results keep the input order.
pub fn run_sweep(specs: &[ExperimentSpec]) -> Vec<Result<RunOutput, CliError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs.iter().map(|s| scope.spawn(move || run_experiment(s))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Io("sweep worker panicked".into()))))
            .collect()
    })
}
