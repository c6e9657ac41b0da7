//! `fracstep`: run the fractional diffusion solver or one of the scripted
//! experiments from a flat `key = value` configuration file.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracstep_core::harness::{self, ExperimentResult};
use fracstep_core::{run, RunOptions};
use serde_json::json;
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown experiment `{0}` (expected one of: {list})", list = EXPERIMENTS.join(", "))]
    UnknownExperiment(String),
    #[error("solver failure: {0}")]
    Solver(#[from] fracstep_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::UnknownExperiment(_) => 1,
            CliError::Solver(_) | CliError::Io(_) => 2,
        }
    }
}

const EXPERIMENTS: [&str; 6] = [
    "convergence",
    "stability",
    "stability-explicit",
    "explicit-instability",
    "point-source",
    "cost-scaling",
];

#[derive(Parser)]
#[command(name = "fracstep", version, about = "Caputo fractional diffusion solver with adaptive time steps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write solution.csv, mesh.csv,
    /// error_trace.csv and summary.json into `out_dir`.
    Solve { config: PathBuf },
    /// Run a named experiment and print one PASS/FAIL line per criterion.
    Experiment {
        name: String,
        config: Option<PathBuf>,
    },
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_solve(path: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::from_file(path)?;
    let problem = cfg.problem_spec()?;
    let grid = cfg.grid(&problem)?;
    let mut policy = cfg.timestep_policy(&grid)?;
    let probe = cfg.probe(&grid)?;
    let exact = config::exact_solution(&cfg)?;

    let options = RunOptions {
        scheme: cfg.scheme,
        max_steps: cfg.max_steps,
    };
    let out = run(&problem, &grid, &mut policy, cfg.t_end, options)?;

    prepare_out_dir(&cfg.out_dir)?;
    let solution = output::solution_csv(&grid, &out.mesh, &out.history, &cfg.snapshot_times, exact.as_ref());
    output::write(&cfg.out_dir.join("solution.csv"), &solution)?;
    output::write(&cfg.out_dir.join("mesh.csv"), &output::mesh_csv(&out.mesh))?;

    let x_probe = grid.x(probe);
    let trace: Vec<(f64, f64)> = (1..out.mesh.len())
        .filter_map(|n| {
            let t = out.mesh.time(n);
            exact(x_probe, t).map(|e| (t, (out.history.u(n)[probe] - e).abs()))
        })
        .collect();
    output::write(&cfg.out_dir.join("error_trace.csv"), &output::trace_csv(&trace))?;

    let summary = json!({
        "problem": cfg.problem_name(),
        "steps": out.summary.steps,
        "wall_ms": out.summary.wall_seconds * 1e3,
        "dt_min_used": out.summary.dt_min_used,
        "dt_max_used": out.summary.dt_max_used,
        "t_final": out.mesh.last(),
        "probe_node": probe,
        "history_bytes": out.history.footprint_bytes(),
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    output::write(&cfg.out_dir.join("summary.json"), &(text + "\n"))?;

    println!(
        "{} steps to t = {} ({:.1} ms), output in {}",
        out.summary.steps,
        out.mesh.last(),
        out.summary.wall_seconds * 1e3,
        cfg.out_dir.display()
    );
    Ok(())
}

fn write_result(dir: &Path, res: &ExperimentResult) -> Result<(), CliError> {
    output::write(&dir.join(format!("{}.csv", res.name)), &res.to_csv())?;
    let json = serde_json::to_string_pretty(res).map_err(|e| CliError::Io(e.to_string()))?;
    output::write(&dir.join(format!("{}.json", res.name)), &(json + "\n"))
}

/// Returns whether every criterion passed.
fn cmd_experiment(name: &str, path: Option<&Path>) -> Result<bool, CliError> {
    if !EXPERIMENTS.contains(&name) {
        return Err(CliError::UnknownExperiment(name.to_string()));
    }
    let cfg = match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    prepare_out_dir(&cfg.out_dir)?;
    let res = match name {
        "convergence" => harness::convergence_study(cfg.gamma, cfg.levels, cfg.seed)?,
        "stability" => harness::stability_suite(cfg.trials, cfg.seed)?,
        "stability-explicit" => harness::stability_suite_explicit(cfg.trials, cfg.seed)?,
        "explicit-instability" => harness::explicit_instability_witness(cfg.seed)?,
        "cost-scaling" => harness::cost_scaling(cfg.n_steps)?,
        "point-source" => {
            let (_, grid) = harness::point_source_setup(cfg.t_end)?;
            let policy = cfg.timestep_policy(&grid)?;
            let outcome = harness::point_source_experiment(&policy, cfg.t_end)?;
            output::write(&cfg.out_dir.join("error_trace.csv"), &output::trace_csv(&outcome.trace))?;
            output::write(
                &cfg.out_dir.join("reference_error_trace.csv"),
                &output::trace_csv(&outcome.reference_trace),
            )?;
            output::write(&cfg.out_dir.join("mesh.csv"), &output::mesh_csv(&outcome.run.mesh))?;
            outcome.result
        }
        _ => unreachable!("checked against EXPERIMENTS"),
    };
    write_result(&cfg.out_dir, &res)?;
    for (k, v) in &res.metrics {
        println!("{k} = {v}");
    }
    for c in &res.criteria {
        println!("{c}");
    }
    Ok(res.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { config } => cmd_solve(config).map(|_| true),
        Command::Experiment { name, config } => cmd_experiment(name, config.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
