use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sil_core::harness::{run_experiment, Experiment, ExperimentConfig};
use sil_core::report::emit_report;

#[derive(Parser)]
#[command(name = "sil", version, about = "Sharp-interface limit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV tables and the JSON report.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Heteroclinic profile and its moments.
    Profile(RunArgs),
    /// Linearized ODE solve with the Fredholm check.
    Linode(RunArgs),
    /// Manufactured half-plane problem on a grid sequence.
    Halfplane(RunArgs),
    /// One-dimensional eigenvalue sweeps.
    Spectrum1d(RunArgs),
    /// Two-dimensional spectral floor on the approximate solution.
    Spectrum2d(RunArgs),
    /// Mean curvature flow of a graph interface.
    Mcf(RunArgs),
    /// Allen-Cahn evolution with energy and bound instrumentation.
    Evolve(RunArgs),
    /// Remainder envelope of the approximate solution.
    Approx(RunArgs),
    /// Convergence study against the approximate solution.
    Converge(RunArgs),
    /// Merge convergence tables and refit the orders.
    Report(RunArgs),
}

impl Command {
    fn split(&self) -> (Experiment, &RunArgs) {
        match self {
            Command::Profile(a) => (Experiment::Profile, a),
            Command::Linode(a) => (Experiment::Linode, a),
            Command::Halfplane(a) => (Experiment::Halfplane, a),
            Command::Spectrum1d(a) => (Experiment::Spectrum1d, a),
            Command::Spectrum2d(a) => (Experiment::Spectrum2d, a),
            Command::Mcf(a) => (Experiment::Mcf, a),
            Command::Evolve(a) => (Experiment::Evolve, a),
            Command::Approx(a) => (Experiment::Approx, a),
            Command::Converge(a) => (Experiment::Converge, a),
            Command::Report(a) => (Experiment::Report, a),
        }
    }
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<bool, String> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let cfg = ExperimentConfig::for_experiment(experiment, &text, base).map_err(|e| e.to_string())?;
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let written = emit_report(std::slice::from_ref(&report), &args.out).map_err(|e| e.to_string())?;
    for t in &report.thresholds {
        let mark = if t.pass { "pass" } else { "FAIL" };
        println!("{mark} {} = {:e} {} {:e}", t.name, t.value, t.relation, t.bound);
    }
    for (k, v) in &report.fitted_orders {
        println!("order {k} = {v:.3}");
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    println!("{} {} run {}", report.experiment, if report.pass { "passed" } else { "failed" }, report.run_id);
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = cli.command.split();
    match run(experiment, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
