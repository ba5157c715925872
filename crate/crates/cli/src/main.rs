//! `cac`: evaluate admission-control scenarios analytically or by simulation.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use cac_core::scenario::{self, RunMode, Scenario, SweepOutcome};
use cac_core::traffic;

#[derive(Parser)]
#[command(name = "cac", about = "Adaptive bandwidth-allocation CAC: chain analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Plot,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; stdout when omitted (csv format only).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the scenario's sim settings.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form chain over the sweep grid.
    Analytic(RunArgs),
    /// Run the discrete-event simulator over the sweep grid.
    Simulate(RunArgs),
    /// Run both and emit paired rows for residual comparison.
    Compare(RunArgs),
    /// Check a scenario file against the model invariants.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Analytic(args) => sweep(args, RunMode::Analytic),
        Command::Simulate(args) => sweep(args, RunMode::Sim),
        Command::Compare(args) => sweep(args, RunMode::Both),
        Command::Validate { config } => validate(config),
    }
}

fn load(path: &PathBuf, seed: Option<u64>) -> anyhow::Result<Scenario> {
    let mut scenario = match scenario::load_scenario(path) {
        Ok(s) => s,
        Err(e @ scenario::ScenarioError::Invalid(_)) => {
            eprintln!("validation failure: {e}");
            std::process::exit(1);
        }
        Err(e) => return Err(e).context("loading scenario"),
    };
    if let (Some(seed), Some(sim)) = (seed, scenario.sim.as_mut()) {
        sim.seed = seed;
    }
    Ok(scenario)
}

fn sweep(args: RunArgs, mode: RunMode) -> anyhow::Result<ExitCode> {
    let scenario = load(&args.config, args.seed)?;
    if matches!(mode, RunMode::Sim | RunMode::Both) && scenario.sim.is_none() {
        eprintln!("validation failure: scenario has no sim settings");
        return Ok(ExitCode::from(1));
    }
    let outcome = scenario::run_sweep(&scenario, mode);
    for f in &outcome.failures {
        eprintln!(
            "row failed: scheme={} lambda_new={} lambda_handover={}: {}",
            f.scheme, f.lambda_new, f.lambda_handover, f.error
        );
    }
    emit(&args, &outcome)?;
    if outcome.rows.is_empty() && !outcome.failures.is_empty() {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn emit(args: &RunArgs, outcome: &SweepOutcome) -> anyhow::Result<()> {
    let csv = scenario::to_csv(&outcome.rows);
    match (&args.out, args.format) {
        (None, OutputFormat::Csv) => print!("{csv}"),
        (None, OutputFormat::Plot) => anyhow::bail!("--format plot requires --out DIR"),
        (Some(dir), format) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))?;
            std::fs::write(dir.join("results.csv"), &csv).context("writing results.csv")?;
            if matches!(format, OutputFormat::Plot) {
                let (pdrop, util) = scenario::to_plot_data(&outcome.rows);
                std::fs::write(dir.join("plot_pdrop.csv"), pdrop)
                    .context("writing plot_pdrop.csv")?;
                std::fs::write(dir.join("plot_utilization.csv"), util)
                    .context("writing plot_utilization.csv")?;
            }
        }
    }
    Ok(())
}

fn validate(config: PathBuf) -> anyhow::Result<ExitCode> {
    match scenario::load_scenario(&config) {
        Ok(scenario) => {
            let cell = scenario.cell_at(scenario.sweep.values[0]);
            let report = traffic::validate(&scenario.mix, &cell);
            if report.is_valid() {
                println!("ok: {} classes, {} policies, {} grid points",
                    scenario.mix.len(), scenario.policies.len(), scenario.sweep.values.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{report}");
                Ok(ExitCode::from(1))
            }
        }
        Err(e @ scenario::ScenarioError::Invalid(_)) => {
            println!("{e}");
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e).context("loading scenario"),
    }
}
