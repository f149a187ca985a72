//! `ncdirichlet`: run one configured command and write `report.json` plus artifacts.
//!
//! Exit codes: 0 when every check passed, 2 when a check failed (outputs still written),
//! 1 on any error (no outputs written).

mod commands;
mod config;
mod error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use ncdirichlet::{Algebra, DirichletSpace};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ncdirichlet", version, about = "Dirichlet forms, tangent calculus and PDE solvers on finite noncommutative spaces")]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config; default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every randomized battery (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Solver tolerance (overrides the config).
    #[arg(long)]
    tol: Option<f64>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|source| CliError::Read { path: args.config.clone(), source })?;
    let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = args.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
        }
        cfg.tolerances.tol = tol;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Write { path, source })
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let cfg = load(args)?;
    let problem = cfg.problem()?;
    let mut algebra = Algebra::new(cfg.backend.clone())?;
    if let Some(eps) = cfg.tolerances.positivity {
        algebra = algebra.with_positivity_tolerance(eps);
    }
    let space = DirichletSpace::new(algebra);
    let outcome = commands::run(&cfg, &problem, &space)?;

    let passed = outcome.report.all_passed();
    let report: Value = json!({
        "command": cfg.command.name(),
        "backend": serde_json::to_value(&cfg.backend)?,
        "seed": cfg.seed,
        "tol": cfg.tolerances.tol,
        "passed": passed,
        "checks": serde_json::to_value(&outcome.report.checks)?,
        "results": outcome.results,
    });
    // serde_json maps are ordered by key, so the emitted JSON has sorted keys

    let dir = args.out.clone().or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|source| CliError::Write { path: dir.clone(), source })?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write(&dir, "report.json", &text)?;
    for (name, contents) in &outcome.artifacts {
        write(&dir, name, contents)?;
    }

    if !args.quiet {
        println!("{}: {}", cfg.command.name(), if passed { "all checks passed" } else { "CHECK FAILURE" });
        for c in &outcome.report.checks {
            let status = if c.skipped {
                "skip"
            } else if c.passed {
                "ok"
            } else {
                "FAIL"
            };
            println!("  {status:<4} {:<32} value={:.3e} tol={:.1e}", c.name, c.value, c.tolerance);
        }
        println!("wrote {}", dir.join("report.json").display());
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
