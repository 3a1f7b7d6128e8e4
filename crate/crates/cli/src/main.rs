//! Experiment harness CLI: `run`, `validate`, `compare`, `curve`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 evaluation failure.

mod config;
mod experiment;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hbrkga::stats::{mean_curve, rank_sum_test};
use hbrkga::objective::RunHistory;

use config::load_experiment;
use experiment::{execute_with_workers, prepare};
use report::read_trials_csv;

#[derive(Parser)]
#[command(
    name = "hbrkga",
    about = "Black-box hyperparameter optimization harness: hybrid random-key \
             genetic search plus grid/random baselines, with budgeted, \
             reproducible trial logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every strategy in the config for the configured number of runs.
    Run {
        config: PathBuf,
        /// Override the worker count from the config (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the output directory from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parse a config and print the effective per-strategy plans.
    Validate { config: PathBuf },
    /// Two-sided rank-sum comparison of per-run final bests from two trial logs.
    Compare {
        log_a: PathBuf,
        log_b: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Mean best-so-far curve of each trial log, as CSV on stdout.
    Curve {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_EVALUATION: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            workers,
            output,
        } => cmd_run(&config, workers, output),
        Command::Validate { config } => cmd_validate(&config),
        Command::Compare { log_a, log_b, alpha } => cmd_compare(&log_a, &log_b, alpha),
        Command::Curve { logs } => cmd_curve(&logs),
    }
}

fn config_failure(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_CONFIG)
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) -> std::io::Result<()> {
    use std::io::Write;
    match std::io::stdout().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn cmd_run(path: &Path, workers: Option<usize>, output: Option<PathBuf>) -> ExitCode {
    let mut config = match load_experiment(path) {
        Ok(config) => config,
        Err(e) => return config_failure(e),
    };
    if let Some(workers) = workers {
        config.workers = workers;
    }
    if let Some(output) = output {
        config.output_dir = output;
    }
    let prepared = match prepare(&config) {
        Ok(prepared) => prepared,
        Err(e) => return config_failure(e),
    };
    match execute_with_workers(&prepared, config.workers) {
        Ok(report) if report.failures.is_empty() => ExitCode::SUCCESS,
        Ok(report) => {
            for failure in &report.failures {
                eprintln!(
                    "evaluation failure: strategy {}, {}",
                    failure.strategy, failure.message
                );
            }
            eprintln!(
                "{} run(s) failed; see {}",
                report.failures.len(),
                config.output_dir.join("errors.csv").display()
            );
            ExitCode::from(EXIT_EVALUATION)
        }
        Err(e) => config_failure(e),
    }
}

fn cmd_validate(path: &Path) -> ExitCode {
    let config = match load_experiment(path) {
        Ok(config) => config,
        Err(e) => return config_failure(e),
    };
    let prepared = match prepare(&config) {
        Ok(prepared) => prepared,
        Err(e) => return config_failure(e),
    };
    let objective = match &config.objective {
        config::ObjectiveSpec::Synthetic(b) => b.name().to_string(),
        config::ObjectiveSpec::Blobs {
            classes, per_class, ..
        } => format!("blobs ({classes} classes x {per_class} points)"),
    };
    println!("objective: {objective} over {} dimensions", config.space.len());
    println!(
        "budget: {} evaluations, {} runs, master seed {}",
        config.budget, config.runs, config.seed
    );
    for (strategy, plan) in prepared.plans() {
        println!("strategy {}: {}", strategy.kind.label(), plan.describe(strategy));
    }
    ExitCode::SUCCESS
}

fn cmd_compare(log_a: &Path, log_b: &Path, alpha: f64) -> ExitCode {
    let result = (|| -> anyhow::Result<String> {
        let a = read_trials_csv(log_a)?;
        let b = read_trials_csv(log_b)?;
        let test = rank_sum_test(&a.final_bests(), &b.final_bests(), alpha)?;
        Ok(format!(
            "strategy_a,strategy_b,p_value,reject\n{},{},{},{}\n",
            a.label, b.label, test.p_value, test.reject
        ))
    })();
    match result {
        Ok(text) => {
            let _ = emit(&text);
            ExitCode::SUCCESS
        }
        Err(e) => config_failure(e),
    }
}

fn cmd_curve(logs: &[PathBuf]) -> ExitCode {
    let result = (|| -> anyhow::Result<Vec<(String, Vec<f64>)>> {
        let mut columns = Vec::new();
        for path in logs {
            let loaded = read_trials_csv(path)?;
            let histories: Vec<RunHistory> = loaded
                .curves
                .iter()
                .map(|curve| synthetic_history(&loaded.label, curve))
                .collect::<anyhow::Result<_>>()?;
            let mut label = loaded.label.clone();
            let duplicates = columns
                .iter()
                .filter(|(existing, _): &&(String, Vec<f64>)| {
                    existing == &label || existing.starts_with(&format!("{label}_"))
                })
                .count();
            if duplicates > 0 {
                label = format!("{label}_{}", duplicates + 1);
            }
            columns.push((label, mean_curve(&histories)?));
        }
        Ok(columns)
    })();
    match result {
        Ok(columns) => {
            let mut text = String::from("trial_index");
            for (label, _) in &columns {
                text.push_str(&format!(",{label}"));
            }
            text.push('\n');
            let rows = columns.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
            for index in 0..rows {
                text.push_str(&index.to_string());
                for (_, curve) in &columns {
                    match curve.get(index) {
                        Some(v) => text.push_str(&format!(",{v}")),
                        None => text.push(','),
                    }
                }
                text.push('\n');
            }
            let _ = emit(&text);
            ExitCode::SUCCESS
        }
        Err(e) => config_failure(e),
    }
}

/// Rebuilds a minimal history whose best-so-far curve equals `curve`, so the
/// on-disk logs can flow back through the aggregation functions.
fn synthetic_history(label: &str, curve: &[f64]) -> anyhow::Result<RunHistory> {
    use hbrkga::hyperspace::HyperVector;
    use hbrkga::objective::{Score, TrialRecord};
    let mut history = RunHistory::new();
    for (i, &best) in curve.iter().enumerate() {
        history.record_trial(TrialRecord {
            strategy: label.to_string(),
            trial_index: i,
            gamma: HyperVector::new(vec![]),
            score: Score::new(best)?,
            wall_time: 0.0,
        })?;
    }
    Ok(history)
}
