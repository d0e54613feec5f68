//! Configuration, experiment runner and artifact writers behind the `fods`
//! command.

pub mod config;
pub mod error;
pub mod runner;
pub mod svg;
pub mod trace;

pub use config::{load_config, parse_raw, validate, ExperimentSpec, RawConfig, ScenarioKind};
pub use error::CliError;
pub use runner::{run_experiment, run_sweep, RunOutput};
pub use svg::render_svg;
pub use trace::{TraceSignals, TraceTable};
