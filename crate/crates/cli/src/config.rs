//! Experiment configuration files.
//!
//! TOML with nested sections; every section is optional and unknown keys
//! are rejected:
//!
//! ```toml
//! scenario = "mpc"        # coeffs | simulate | observe | closedloop | mpc | verify-separation
//! horizon = 160
//! seed = 7
//!
//! [model]
//! preset = "paper"        # or inline a / b / c / alpha matrices
//!
//! [initial]
//! x0 = [0.1, 0.0, 0.0, 0.0]
//! random_amplitude = 0.0  # draw x0 from U(-a, a) when x0 is absent
//!
//! [mpc]
//! prediction_horizon = 8
//! control_horizon = 4
//! ```

use std::path::{Path, PathBuf};

use fods_core::presets::{paper_model, scalar_model};
use fods_core::{FractionalOrders, Matrix, MpcConfig, SystemModel, Vector};
use serde::Deserialize;

use crate::error::CliError;

/// Which experiment a spec runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Coeffs,
    Simulate,
    Observe,
    Closedloop,
    Mpc,
    VerifySeparation,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Coeffs => "coeffs",
            ScenarioKind::Simulate => "simulate",
            ScenarioKind::Observe => "observe",
            ScenarioKind::Closedloop => "closedloop",
            ScenarioKind::Mpc => "mpc",
            ScenarioKind::VerifySeparation => "verify-separation",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<ScenarioKind>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: RawModel,
    #[serde(default)]
    pub initial: RawInitial,
    #[serde(default)]
    pub input: RawInput,
    #[serde(default)]
    pub observer: RawGains,
    #[serde(default)]
    pub feedback: RawGains,
    #[serde(default)]
    pub mpc: RawMpc,
    #[serde(default)]
    pub reference: RawReference,
    #[serde(default)]
    pub separation: RawSeparation,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub preset: Option<String>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<Vec<f64>>>,
    pub c: Option<Vec<Vec<f64>>>,
    pub alpha: Option<Vec<f64>>,
    pub strict_alpha: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInitial {
    pub x0: Option<Vec<f64>>,
    pub xhat0: Option<Vec<f64>>,
    pub random_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInput {
    pub kind: Option<InputKind>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGains {
    pub target_radius: Option<f64>,
    pub gains: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMpc {
    pub prediction_horizon: Option<usize>,
    pub control_horizon: Option<usize>,
    pub mvar_order: Option<usize>,
    pub regularization: Option<f64>,
    pub sample_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawReference {
    pub frequency: Option<f64>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSeparation {
    pub block_order: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<PathBuf>,
    pub svg: Option<bool>,
    pub channels: Option<Vec<String>>,
}

/// Open-loop excitation for `simulate` and `observe`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    #[default]
    Zero,
    /// Uniform on `(-amplitude, amplitude)`, drawn from the seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GainSource {
    /// Pole placement at the given spectral radius.
    Design(f64),
    /// Explicit taps `G_0, G_1, ...`.
    Explicit(Vec<Matrix>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Given(Vector),
    /// Uniform on `(-a, a)` per channel, drawn from the seed.
    Random(f64),
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioKind,
    pub model_name: String,
    pub model: SystemModel,
    pub horizon: usize,
    pub seed: u64,
    pub x0: InitialState,
    pub xhat0: Vector,
    pub input_kind: InputKind,
    pub input_amplitude: f64,
    pub observer: GainSource,
    pub feedback: GainSource,
    pub mpc: MpcConfig,
    pub reference_frequency: f64,
    pub reference_amplitude: f64,
    pub block_order: usize,
    pub separation_tolerance: f64,
    pub out_dir: PathBuf,
    pub svg: bool,
    pub channels: Option<Vec<String>>,
}

pub const DEFAULT_HORIZON: usize = 160;
pub const DEFAULT_TARGET_RADIUS: f64 = 0.5;
pub const DEFAULT_REFERENCE_FREQUENCY: f64 = 8.0;
pub const DEFAULT_BLOCK_ORDER: usize = 10;
pub const DEFAULT_SEPARATION_TOLERANCE: f64 = 1e-8;

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

/// Parses TOML without validating it.
pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    toml::from_str::<RawConfig>(text).map_err(|e| {
        let msg = e.message().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                CliError::Config(format!("parse error at line {line}, column {col}: {msg}"))
            }
            None => CliError::Config(format!("parse error: {msg}")),
        }
    })
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let raw = parse_raw(&text)?;
    if raw.scenario.is_none() {
        return Err(CliError::Config("parse error: missing field `scenario`".into()));
    }
    validate(raw)
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(CliError::Config(format!("{field}: matrix must be non-empty")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::Config(format!(
            "{field}: row {} has {} entries, expected {ncols}",
            i + 1,
            rows[i].len()
        )));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn model_from(raw: &RawModel) -> Result<(String, SystemModel), CliError> {
    let inline = raw.a.is_some() || raw.b.is_some() || raw.c.is_some() || raw.alpha.is_some();
    if let Some(name) = &raw.preset {
        if inline {
            return Err(CliError::Config("model: give either `preset` or inline matrices, not both".into()));
        }
        return match name.as_str() {
            "paper" => Ok(("paper".into(), paper_model())),
            "scalar" => Ok(("scalar".into(), scalar_model())),
            other => Err(CliError::Config(format!("model.preset: unknown preset `{other}` (expected paper or scalar)"))),
        };
    }
    if !inline {
        return Ok(("paper".into(), paper_model()));
    }
    let need = |name: &str, v: &Option<Vec<Vec<f64>>>| -> Result<Matrix, CliError> {
        let rows = v.as_ref().ok_or_else(|| CliError::Config(format!("model.{name}: missing")))?;
        matrix(&format!("model.{name}"), rows)
    };
    let a = need("a", &raw.a)?;
    let b = need("b", &raw.b)?;
    let c = need("c", &raw.c)?;
    let alpha = raw.alpha.clone().ok_or_else(|| CliError::Config("model.alpha: missing".into()))?;
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CliError::Config(format!("model.a: must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    if b.nrows() != n {
        return Err(CliError::Config(format!("model.b: has {} rows, expected {n}", b.nrows())));
    }
    if c.ncols() != n {
        return Err(CliError::Config(format!("model.c: has {} columns, expected {n}", c.ncols())));
    }
    if alpha.len() != n {
        return Err(CliError::Config(format!("model.alpha: has {} entries, expected {n}", alpha.len())));
    }
    let orders = if raw.strict_alpha.unwrap_or(true) {
        FractionalOrders::new(alpha)
    } else {
        FractionalOrders::relaxed(alpha)
    }
    .map_err(|e| CliError::Config(format!("model.alpha: {e}")))?;
    let model = SystemModel::new(a, b, c, orders).map_err(|e| CliError::Config(format!("model: {e}")))?;
    Ok(("inline".into(), model))
}

fn vector(field: &str, v: &[f64], n: usize) -> Result<Vector, CliError> {
    if v.len() != n {
        return Err(CliError::Config(format!("{field}: has {} entries, expected {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("{field}: entries must be finite")));
    }
    Ok(Vector::from_column_slice(v))
}

fn gains(field: &str, raw: &RawGains, shape: (usize, usize)) -> Result<GainSource, CliError> {
    match (&raw.gains, raw.target_radius) {
        (Some(_), Some(_)) => Err(CliError::Config(format!("{field}: give either `gains` or `target_radius`, not both"))),
        (Some(list), None) => {
            if list.is_empty() {
                return Err(CliError::Config(format!("{field}.gains: at least one gain is required")));
            }
            let mut out = Vec::with_capacity(list.len());
            for (j, rows) in list.iter().enumerate() {
                let m = matrix(&format!("{field}.gains[{j}]"), rows)?;
                if m.shape() != shape {
                    return Err(CliError::Config(format!(
                        "{field}.gains[{j}]: shape {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        shape.0,
                        shape.1
                    )));
                }
                out.push(m);
            }
            Ok(GainSource::Explicit(out))
        }
        (None, r) => {
            let r = r.unwrap_or(DEFAULT_TARGET_RADIUS);
            if !(r.is_finite() && r >= 0.0) {
                return Err(CliError::Config(format!("{field}.target_radius: {r} must be finite and >= 0")));
            }
            Ok(GainSource::Design(r))
        }
    }
}

/// Applies defaults and checks every field.
pub fn validate(raw: RawConfig) -> Result<ExperimentSpec, CliError> {
    let scenario = raw.scenario.ok_or_else(|| CliError::Config("scenario: missing".into()))?;
    let (model_name, model) = model_from(&raw.model)?;
    let n = model.states();

    let mpc = MpcConfig {
        prediction_horizon: raw.mpc.prediction_horizon.unwrap_or(fods_core::presets::PAPER_PREDICTION_HORIZON),
        control_horizon: raw.mpc.control_horizon.unwrap_or(fods_core::presets::PAPER_CONTROL_HORIZON),
        mvar_order: raw.mpc.mvar_order.unwrap_or(16),
        regularization: raw.mpc.regularization.unwrap_or(1e-6),
        sample_rate: raw.mpc.sample_rate.unwrap_or(fods_core::presets::PAPER_SAMPLE_RATE),
    };
    if mpc.control_horizon > mpc.prediction_horizon {
        return Err(CliError::Config(format!(
            "mpc.control_horizon ({}) must not exceed mpc.prediction_horizon ({})",
            mpc.control_horizon, mpc.prediction_horizon
        )));
    }
    mpc.validate().map_err(|e| CliError::Config(format!("mpc: {e}")))?;

    let x0 = match (&raw.initial.x0, raw.initial.random_amplitude) {
        (Some(_), Some(a)) if a != 0.0 => {
            return Err(CliError::Config("initial: give either `x0` or `random_amplitude`, not both".into()))
        }
        (Some(v), _) => InitialState::Given(vector("initial.x0", v, n)?),
        (None, Some(a)) if a != 0.0 => {
            if !(a.is_finite() && a > 0.0) {
                return Err(CliError::Config(format!("initial.random_amplitude: {a} must be positive")));
            }
            InitialState::Random(a)
        }
        (None, _) => InitialState::Given(Vector::zeros(n)),
    };
    let xhat0 = match &raw.initial.xhat0 {
        Some(v) => vector("initial.xhat0", v, n)?,
        None => Vector::zeros(n),
    };

    let input_amplitude = raw.input.amplitude.unwrap_or(1.0);
    if !input_amplitude.is_finite() {
        return Err(CliError::Config("input.amplitude: must be finite".into()));
    }

    let observer = gains("observer", &raw.observer, (n, model.outputs()))?;
    let feedback = gains("feedback", &raw.feedback, (model.inputs(), n))?;

    let reference_frequency = raw.reference.frequency.unwrap_or(DEFAULT_REFERENCE_FREQUENCY);
    if !(reference_frequency > 0.0 && reference_frequency < mpc.sample_rate / 2.0) {
        return Err(CliError::Config(format!(
            "reference.frequency ({reference_frequency}) must lie in (0, mpc.sample_rate / 2 = {})",
            mpc.sample_rate / 2.0
        )));
    }
    let reference_amplitude = raw.reference.amplitude.unwrap_or(1.0);
    if !reference_amplitude.is_finite() {
        return Err(CliError::Config("reference.amplitude: must be finite".into()));
    }

    let block_order = raw.separation.block_order.unwrap_or(DEFAULT_BLOCK_ORDER);
    if block_order == 0 {
        return Err(CliError::Config("separation.block_order: must be at least 1".into()));
    }
    let separation_tolerance = raw.separation.tolerance.unwrap_or(DEFAULT_SEPARATION_TOLERANCE);
    if separation_tolerance.is_nan() || separation_tolerance < 0.0 {
        return Err(CliError::Config("separation.tolerance: must be >= 0".into()));
    }

    Ok(ExperimentSpec {
        scenario,
        model_name,
        model,
        horizon: raw.horizon.unwrap_or(DEFAULT_HORIZON),
        seed: raw.seed.unwrap_or(0),
        x0,
        xhat0,
        input_kind: raw.input.kind.unwrap_or_default(),
        input_amplitude,
        observer,
        feedback,
        mpc,
        reference_frequency,
        reference_amplitude,
        block_order,
        separation_tolerance,
        out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        svg: raw.output.svg.unwrap_or(false),
        channels: raw.output.channels,
    })
}
