use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use lowswitch::harness::{
    check::run_check_suite, env_registry, run_experiment, write_experiment, ExperimentConfig, ExperimentError,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lowswitch",
    version,
    about = "Low-switching-cost optimistic value iteration simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (K, seed, variant) cell of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Same as `run`, always writing a sweep summary.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle and property suite.
    Check {
        /// Enumeration budget for nets and policy tables.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// List the environment registry.
    Envs,
}

enum Failure {
    Validation(anyhow::Error),
    Other(anyhow::Error),
}

fn load(config: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(Failure::Validation)?;
    ExperimentConfig::from_json(&text)
        .with_context(|| format!("validating {}", config.display()))
        .map_err(Failure::Validation)
}

fn run(config: &Path, out: Option<PathBuf>, require_summary: bool) -> Result<(), Failure> {
    let cfg = load(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let out_dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let logs = run_experiment(&cfg, base).map_err(|e| match e {
        ExperimentError::Config(_) | ExperimentError::Env(_) => Failure::Validation(e.into()),
        other => Failure::Other(other.into()),
    })?;
    let summary = write_experiment(&logs, &out_dir).map_err(|e| Failure::Other(e.into()))?;
    if require_summary && summary.is_none() {
        return Err(Failure::Validation(anyhow::anyhow!(
            "k_grid: a sweep needs at least 2 distinct episode counts"
        )));
    }
    println!("wrote {} runs to {}", logs.len(), out_dir.display());
    if let Some(s) = summary {
        for v in &s.variants {
            println!(
                "{}: switch fit slope {:.4} (R² {:.3}), regret √K fit R² {:.3}",
                v.variant, v.switch_fit.slope, v.switch_fit.r2, v.regret_sqrt_fit.r2
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => run(&config, out, false),
        Command::Sweep { config, out } => run(&config, out, true),
        Command::Check { budget } => {
            let report = run_check_suite(budget);
            println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
            if report.passed() {
                Ok(())
            } else {
                return ExitCode::from(EXIT_CHECK);
            }
        }
        Command::Envs => {
            for e in env_registry() {
                println!("{:<16} ({}) {}", e.name, e.params, e.description);
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
