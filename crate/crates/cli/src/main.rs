use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fods_cli::config::RawModel;
use fods_cli::{parse_raw, run_experiment, run_sweep, validate, CliError, ExperimentSpec, RawConfig, RunOutput, ScenarioKind};

#[derive(Parser)]
#[command(name = "fods", version, about = "Fractional-order system experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the Grünwald-Letnikov coefficient table.
    Coeffs(Common),
    /// Open-loop simulation.
    Simulate(Common),
    /// Open-loop plant with a state observer.
    Observe(Common),
    /// Observer-based memory feedback.
    Closedloop(Common),
    /// Receding-horizon tracking of a square-wave reference.
    Mpc(Common),
    /// Spectral separation check on a block-Toeplitz truncation.
    VerifySeparation(Common),
    /// Run several configuration files concurrently.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in model (paper or scalar), overriding the config's model.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render an SVG plot of the trace.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of steps (or coefficient horizon for `coeffs`).
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Configuration files; each must name its scenario.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Parent directory; each run writes into `<out>/<config stem>/`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_raw(path: &Path) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_raw(&text)
}

fn build_spec(kind: ScenarioKind, args: &Common) -> Result<ExperimentSpec, CliError> {
    let mut raw = match &args.config {
        Some(path) => read_raw(path)?,
        None => RawConfig::default(),
    };
    if let Some(found) = raw.scenario {
        if found != kind {
            return Err(CliError::Config(format!(
                "scenario: config says `{}` but the subcommand is `{}`",
                found.name(),
                kind.name()
            )));
        }
    }
    raw.scenario = Some(kind);
    if let Some(preset) = &args.preset {
        raw.model = RawModel { preset: Some(preset.clone()), ..RawModel::default() };
    }
    if args.horizon.is_some() {
        raw.horizon = args.horizon;
    }
    if args.seed.is_some() {
        raw.seed = args.seed;
    }
    if args.out.is_some() {
        raw.output.dir = args.out.clone();
    }
    if args.svg {
        raw.output.svg = Some(true);
    }
    validate(raw)
}

fn report(out: &RunOutput) {
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    for (k, v) in &out.metrics {
        println!("{k} = {v:.6e}");
    }
}

fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut specs = Vec::with_capacity(args.configs.len());
    for path in &args.configs {
        let raw = read_raw(path)?;
        if raw.scenario.is_none() {
            return Err(CliError::Config(format!("{}: missing field `scenario`", path.display())));
        }
        let mut spec = validate(raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
        let parent = args.out.clone().unwrap_or_else(|| spec.out_dir.clone());
        spec.out_dir = parent.join(stem);
        specs.push(spec);
    }
    let mut first_err = None;
    for (path, result) in args.configs.iter().zip(run_sweep(&specs)) {
        match result {
            Ok(out) => report(&out),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (kind, args) = match &cli.command {
        Command::Coeffs(a) => (ScenarioKind::Coeffs, a),
        Command::Simulate(a) => (ScenarioKind::Simulate, a),
        Command::Observe(a) => (ScenarioKind::Observe, a),
        Command::Closedloop(a) => (ScenarioKind::Closedloop, a),
        Command::Mpc(a) => (ScenarioKind::Mpc, a),
        Command::VerifySeparation(a) => (ScenarioKind::VerifySeparation, a),
        Command::Sweep(a) => return sweep(a),
    };
    let spec = build_spec(kind, args)?;
    report(&run_experiment(&spec)?);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
