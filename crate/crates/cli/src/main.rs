//! Command-line runner: scenario runs with JSON reports, refinement tables
//! and the invariant suites.
//!
//! Exit codes: 0 success, 1 a checked invariant failed (strict mode),
//! 2 usage or configuration error, 3 numerical failure.

mod config;
mod report;
mod suites;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::builder::PossibleValuesParser;
use clap::{Parser, Subcommand};
use evoreg::diagnostics::{phenomenon_probe, refinement_study};
use evoreg::scenarios::Forcing;
use evoreg::verification::Suite;

use config::{Config, DEFAULT_SEED};
use report::{refinement_csv, write_atomic, ConfigEcho, Diagnostics, Meta, RunReport};

#[derive(Parser, Debug)]
#[command(name = "evoreg", version, about = "Maximal regularity experiments for evolutionary equations")]
struct Cli {
    /// Seed for random probes and rough forcing [default: config value, else 20240601]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Exit with status 1 when a checked invariant fails (default)
    #[arg(long, global = true, overrides_with = "no_strict")]
    strict: bool,
    /// Report failed invariants but exit 0
    #[arg(long = "no-strict", global = true, overrides_with = "strict")]
    no_strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the configured scenario, run its suites and a refinement study, write a JSON report
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one invariant suite and print its table
    Verify {
        #[arg(value_parser = PossibleValuesParser::new(Suite::ALL.map(|s| s.name())))]
        suite: String,
        /// Dyadic refinement of the suite's default resolutions
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Refinement study of the configured scenario as a CSV table
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Outcome {
    Passed,
    Failed(Vec<String>),
}

/// Errors that are the caller's fault rather than the numerics'.
struct UsageError(anyhow::Error);

fn load(path: &Path, seed: Option<u64>) -> std::result::Result<(Config, evoreg::scenarios::ScenarioSpec, u64), UsageError> {
    let config = Config::load(path).map_err(UsageError)?;
    let seed = seed.or(config.scenario.seed).unwrap_or(DEFAULT_SEED);
    let spec = config.scenario_spec(seed).map_err(UsageError)?;
    Ok((config, spec, seed))
}

fn run(config_path: &Path, out: &Path, seed: Option<u64>, strict: bool) -> Result<Outcome> {
    let (config, spec, seed) = load(config_path, seed).map_err(|e| e.0)?;
    let total = Instant::now();
    let mut timings = BTreeMap::new();
    let mut failures = Vec::new();

    let mut suites = BTreeMap::new();
    let mut wanted = config.suites.run.clone();
    wanted.sort();
    wanted.dedup();
    for suite in wanted {
        let (result, secs) = suites::run_suite(suite, config.suites.level, seed)?;
        failures.extend(result.failures(suite));
        timings.insert(format!("suite.{suite}"), secs);
        suites.insert(suite.name().to_string(), result);
    }

    let start = Instant::now();
    let refinement = refinement_study(&spec, config.solver.levels, config.solver.scheme)?;
    timings.insert("diagnostics.refinement".into(), start.elapsed().as_secs_f64());
    let rough = matches!(spec.forcing, Forcing::Rough { .. });
    for (flag, ok) in &refinement.flags {
        // rough data make du/dt rough by construction; reported, not asserted
        if !ok && !(rough && flag == "derivative_resolved") {
            failures.push(format!("diagnostics: {flag}"));
        }
    }
    let tol = config.solver.residual_tolerance;
    let residuals_ok = refinement.refinement.iter().all(|r| r.residual < tol);
    if !residuals_ok {
        failures.push(format!("diagnostics: residual above {tol:e}"));
    }
    let phenomenon = if rough {
        let start = Instant::now();
        let p = phenomenon_probe(&spec, config.solver.levels, config.solver.scheme)?;
        timings.insert("diagnostics.phenomenon".into(), start.elapsed().as_secs_f64());
        if !p.cu_half_stable {
            failures.push("diagnostics: |Cu|_{1/2} not stable under refinement".into());
        }
        if !p.v_half_stable {
            failures.push("diagnostics: |v|_{1/2} not stable under refinement".into());
        }
        Some(p)
    } else {
        None
    };
    timings.insert("total".into(), total.elapsed().as_secs_f64());

    let report = RunReport {
        config: ConfigEcho {
            file: config,
            resolved: spec,
        },
        suites,
        diagnostics: Diagnostics {
            refinement,
            phenomenon,
            residual_tolerance: tol,
            residuals_within_tolerance: residuals_ok,
        },
        timings,
        meta: Meta {
            tool: "evoreg",
            version: env!("CARGO_PKG_VERSION"),
            seed,
            strict,
            passed: failures.is_empty(),
            failures: failures.clone(),
        },
    };
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_atomic(out, &json)?;

    let d = &report.diagnostics.refinement;
    println!(
        "kappa = {} (spread over {} levels: {})",
        d.kappa.map_or("undefined".into(), |k| format!("{k:.6}")),
        d.refinement.len(),
        d.kappa_ratio.map_or("undefined".into(), |r| format!("{r:.6}"))
    );
    println!("report written to {}", out.display());
    Ok(if failures.is_empty() { Outcome::Passed } else { Outcome::Failed(failures) })
}

fn verify(name: &str, level: usize, seed: Option<u64>) -> Result<Outcome> {
    let suite: Suite = name.parse()?;
    let (result, secs) = suites::run_suite(suite, level, seed.unwrap_or(DEFAULT_SEED))?;
    suites::print_table(suite, &result);
    println!("elapsed {secs:.2} s");
    let failures = result.failures(suite);
    Ok(if failures.is_empty() { Outcome::Passed } else { Outcome::Failed(failures) })
}

fn convergence(config_path: &Path, levels: usize, out: &Path, seed: Option<u64>) -> Result<Outcome> {
    let (config, spec, _) = load(config_path, seed).map_err(|e| e.0)?;
    let study = refinement_study(&spec, levels, config.solver.scheme).context("refinement study")?;
    let csv = refinement_csv(&study.refinement);
    write_atomic(out, csv.as_bytes())?;
    print!("{csv}");
    let failures: Vec<String> = study
        .flags
        .iter()
        .filter(|(_, ok)| !**ok)
        .map(|(flag, _)| format!("diagnostics: {flag}"))
        .collect();
    Ok(if failures.is_empty() { Outcome::Passed } else { Outcome::Failed(failures) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let strict = !cli.no_strict;

    // configuration problems are usage errors, checked before any numerics
    let preflight = match &cli.command {
        Command::Run { config, .. } | Command::Convergence { config, .. } => load(config, cli.seed).err(),
        Command::Verify { .. } => None,
    };
    if let Some(UsageError(e)) = preflight {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if let Command::Convergence { levels, .. } = &cli.command {
        if *levels < 3 {
            eprintln!("error: --levels must be at least 3, got {levels}");
            return ExitCode::from(2);
        }
    }

    let outcome = match &cli.command {
        Command::Run { config, out } => run(config, out, cli.seed, strict),
        Command::Verify { suite, level } => verify(suite, *level, cli.seed),
        Command::Convergence { config, levels, out } => convergence(config, *levels, out, cli.seed),
    };
    match outcome {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(failures)) => {
            for f in &failures {
                eprintln!("failed: {f}");
            }
            if strict {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
