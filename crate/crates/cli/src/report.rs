//! Trial-log CSV/JSONL emission and re-ingestion.
//!
//! Floats are rendered with Rust's shortest round-trip formatting, so a row
//! written and re-read reproduces the exact bit patterns, and identical
//! experiments produce byte-identical files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hbrkga::objective::RunHistory;

use crate::config::TimingMode;

/// All runs of one strategy, in run order.
pub struct StrategyLog {
    pub label: String,
    pub runs: Vec<(usize, RunHistory)>,
}

fn wall_time_field(wall_time: f64, timing: TimingMode) -> String {
    match timing {
        TimingMode::Zero => "0".to_string(),
        TimingMode::Real => format!("{wall_time}"),
    }
}

/// `strategy,run,trial_index,dim_0..dim_{n-1},score,best_so_far,wall_time_s`
pub fn write_trials_csv(path: &Path, log: &StrategyLog, timing: TimingMode) -> Result<()> {
    let dims = log
        .runs
        .first()
        .and_then(|(_, h)| h.trials().first())
        .map_or(0, |t| t.gamma.len());
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut header = vec!["strategy".to_string(), "run".to_string(), "trial_index".to_string()];
    header.extend((0..dims).map(|d| format!("dim_{d}")));
    header.extend(["score".to_string(), "best_so_far".to_string(), "wall_time_s".to_string()]);
    writer.write_record(&header)?;

    for (run, history) in &log.runs {
        for (trial, best) in history.trials().iter().zip(history.best_so_far()) {
            let mut row = vec![
                trial.strategy.clone(),
                run.to_string(),
                trial.trial_index.to_string(),
            ];
            row.extend(trial.gamma.values().iter().map(|v| format!("{v}")));
            row.push(format!("{}", trial.score.value()));
            row.push(format!("{}", best.value()));
            row.push(wall_time_field(trial.wall_time, timing));
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// One JSON object per trial, mirroring the CSV schema.
pub fn write_trials_jsonl(path: &Path, log: &StrategyLog, timing: TimingMode) -> Result<()> {
    let mut out = String::new();
    for (run, history) in &log.runs {
        for (trial, best) in history.trials().iter().zip(history.best_so_far()) {
            let wall_time = match timing {
                TimingMode::Zero => 0.0,
                TimingMode::Real => trial.wall_time,
            };
            let line = serde_json::json!({
                "strategy": trial.strategy,
                "run": run,
                "trial_index": trial.trial_index,
                "gamma": trial.gamma.values(),
                "score": trial.score.value(),
                "best_so_far": best.value(),
                "wall_time_s": wall_time,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Per-run curves and final bests recovered from a trial CSV.
pub struct LoadedLog {
    pub label: String,
    /// Best-so-far sequence of each run, in file order.
    pub curves: Vec<Vec<f64>>,
}

impl LoadedLog {
    pub fn final_bests(&self) -> Vec<f64> {
        self.curves
            .iter()
            .filter_map(|c| c.last().copied())
            .collect()
    }
}

pub fn read_trials_csv(path: &Path) -> Result<LoadedLog> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: missing column `{name}`", path.display()))
    };
    let strategy_col = column("strategy")?;
    let run_col = column("run")?;
    let best_col = column("best_so_far")?;

    let mut label = String::new();
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut current_run: Option<u64> = None;
    for (index, record) in reader.records().enumerate() {
        let record = record?;
        let line = index + 2;
        if label.is_empty() {
            label = record[strategy_col].to_string();
        }
        let run: u64 = record[run_col]
            .parse()
            .with_context(|| format!("{}:{line}: bad run index", path.display()))?;
        let best: f64 = record[best_col]
            .parse()
            .with_context(|| format!("{}:{line}: bad best_so_far", path.display()))?;
        if current_run != Some(run) {
            current_run = Some(run);
            curves.push(Vec::new());
        }
        curves.last_mut().expect("pushed above").push(best);
    }
    if curves.is_empty() {
        bail!("{}: no trial rows", path.display());
    }
    Ok(LoadedLog { label, curves })
}

/// `strategy,runs,mean_best,std_best` (std empty for a single run).
pub fn write_summary_csv(path: &Path, summaries: &[hbrkga::stats::RunSummary]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    writer.write_record(["strategy", "runs", "mean_best", "std_best"])?;
    for summary in summaries {
        writer.write_record([
            summary.strategy.clone(),
            summary.bests.len().to_string(),
            format!("{}", summary.mean),
            summary.std.map_or_else(String::new, |s| format!("{s}")),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub struct ComparisonRow {
    pub strategy_a: String,
    pub strategy_b: String,
    pub p_value: f64,
    pub reject: bool,
}

/// `strategy_a,strategy_b,p_value,reject`
pub fn write_comparisons_csv(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    writer.write_record(["strategy_a", "strategy_b", "p_value", "reject"])?;
    for row in rows {
        writer.write_record([
            row.strategy_a.clone(),
            row.strategy_b.clone(),
            format!("{}", row.p_value),
            row.reject.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `trial_index,<label>...`: one column of mean best-so-far per strategy.
pub fn write_curves_csv(path: &Path, columns: &[(String, Vec<f64>)]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut header = vec!["trial_index".to_string()];
    header.extend(columns.iter().map(|(label, _)| label.clone()));
    writer.write_record(&header)?;
    let rows = columns.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    for index in 0..rows {
        let mut row = vec![index.to_string()];
        for (_, curve) in columns {
            row.push(curve.get(index).map_or_else(String::new, |v| format!("{v}")));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
