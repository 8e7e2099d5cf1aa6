use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rabisim::config::{list_defaults, parse_config, Experiment, RunConfig};
use rabisim::dispatch::{dispatch, output_dir};
use rabisim::{Result, RunError};

/// Simulates a driven qubit–oscillator device and writes CSV traces plus a
/// summary for each experiment.
#[derive(Parser)]
#[command(name = "rabisim", version)]
struct Cli {
    /// Print the device defaults and exit.
    #[arg(long)]
    list_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one key, e.g. `--set g_mhz=5.5` or `--set device.t2_us=1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Resonant qubit–mode swap and its decay.
    VacuumRabi(RunArgs),
    /// Swap dynamics across qubit detunings.
    DetuningMap(RunArgs),
    /// Collapse and revival of the driven qubit.
    CollapseRevival(RunArgs),
    /// Revival enhancement from the qubit energy drive.
    FullRabi(RunArgs),
    /// Driven model against the ideal effective Hamiltonian.
    VerifyScheme(RunArgs),
    /// Influence of a direct resonator drive.
    Parasitic(RunArgs),
    /// Loss of the enhancement under phase or frequency mismatch.
    ViolateConstraint(RunArgs),
    /// Qubit–mode avoided crossing.
    AvoidedCrossing(RunArgs),
    /// Transmon spectrum from the charge basis.
    TransmonLevels(RunArgs),
    /// Bias-tee pulse compensation.
    BiasTee(RunArgs),
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        use Command::*;
        match self {
            VacuumRabi(a) => (Experiment::VacuumRabi, a),
            DetuningMap(a) => (Experiment::DetuningMap, a),
            CollapseRevival(a) => (Experiment::CollapseRevival, a),
            FullRabi(a) => (Experiment::FullRabi, a),
            VerifyScheme(a) => (Experiment::VerifyScheme, a),
            Parasitic(a) => (Experiment::Parasitic, a),
            ViolateConstraint(a) => (Experiment::ViolateConstraint, a),
            AvoidedCrossing(a) => (Experiment::AvoidedCrossing, a),
            TransmonLevels(a) => (Experiment::TransmonLevels, a),
            BiasTee(a) => (Experiment::BiasTee, a),
        }
    }
}

fn run(experiment: Experiment, args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.clone(), source })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    for o in &args.overrides {
        cfg.set(o)?;
    }
    let resolved = cfg.resolve(experiment)?;
    let dir = output_dir(&resolved, args.out.as_deref());
    log::info!("running {} into {}", experiment.name(), dir.display());
    let (outcome, files) = dispatch(&resolved, &dir)?;
    for (k, v) in outcome.summary.entries() {
        println!("{k} = {v}");
    }
    for w in outcome.summary.warnings() {
        println!("warning: {w}");
    }
    for f in files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RABISIM_LOG", "warn")).init();
    let cli = Cli::parse();
    if cli.list_defaults {
        print!("{}", list_defaults());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no experiment given; see --help");
        return ExitCode::from(2);
    };
    let (experiment, args) = command.split();
    match run(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
