//! Experiment orchestration: budget planning, per-run execution on a worker
//! pool, and result emission.



use anyhow::{Context, Result};
use hbrkga::baselines::{grid_search, random_search, GridPlan};
use hbrkga::benchmarks::SyntheticObjective;
use hbrkga::brkga::{self, BrkgaConfig};
use hbrkga::learner::{ann_objective, make_blobs, Dataset};
use hbrkga::objective::{CountingObjective, Objective, RunHistory};
use hbrkga::rng::derive_seed;
use hbrkga::stats::{mean_curve, rank_sum_test, summarize};

use crate::config::{
    ConfigError, ExperimentConfig, ObjectiveSpec, StrategyConfig, StrategyKind,
};
use crate::report::{
    write_comparisons_csv, write_curves_csv, write_summary_csv, write_trials_csv,
    write_trials_jsonl, ComparisonRow, StrategyLog,
};

const COMPARISON_ALPHA: f64 = 0.05;

/// Budget realization for one strategy.
#[derive(Clone, Debug)]
pub enum EffectivePlan {
    Grid(GridPlan),
    Random { samples: usize },
    Evolution { generations: usize },
}

impl EffectivePlan {
    pub fn describe(&self, strategy: &StrategyConfig) -> String {
        match self {
            Self::Grid(plan) => format!("{} combinations", plan.combination_count()),
            Self::Random { samples } => format!("{samples} samples"),
            Self::Evolution { generations } => format!(
                "{generations} generations x {} individuals x (1+{}) evaluations",
                strategy.evolution.population_size, strategy.evolution.walk_steps
            ),
        }
    }
}

/// Maps a strategy onto the evaluation budget. Grid plans may undershoot the
/// budget but must not exceed it; the evolutionary strategies must divide it
/// exactly.
pub fn strategy_budget_map(
    strategy: &StrategyConfig,
    budget: usize,
    space: &hbrkga::hyperspace::HyperSpace,
) -> std::result::Result<EffectivePlan, ConfigError> {
    match strategy.kind {
        StrategyKind::Grid => {
            let plan = GridPlan::from_space(space)
                .map_err(|e| ConfigError(format!("grid strategy: {e}")))?;
            let combos = plan.combination_count();
            if combos > budget {
                return Err(ConfigError(format!(
                    "grid plan enumerates {combos} combinations, exceeding the budget of {budget}"
                )));
            }
            Ok(EffectivePlan::Grid(plan))
        }
        StrategyKind::Random => Ok(EffectivePlan::Random { samples: budget }),
        StrategyKind::Brkga | StrategyKind::Hbrkga => {
            let settings = &strategy.evolution;
            let per_generation = settings.population_size * (1 + settings.walk_steps);
            let remainder = budget % per_generation;
            if remainder != 0 {
                return Err(ConfigError(format!(
                    "budget {budget} is not a multiple of {} individuals x (1+{}) walk evaluations \
                     = {per_generation} per generation (remainder {remainder})",
                    settings.population_size, settings.walk_steps
                )));
            }
            let generations = budget / per_generation;
            // surface population-shape problems as config errors, before any run
            brkga_config(strategy, space.len(), generations, 0)
                .validate()
                .map_err(|e| ConfigError(format!("{} strategy: {e}", strategy.kind.label())))?;
            Ok(EffectivePlan::Evolution { generations })
        }
    }
}

fn brkga_config(
    strategy: &StrategyConfig,
    dims: usize,
    generations: usize,
    seed: u64,
) -> BrkgaConfig {
    let settings = &strategy.evolution;
    BrkgaConfig {
        population_size: settings.population_size,
        elite_size: settings.elite_size,
        mutant_size: settings.mutant_size,
        dims,
        elite_bias: settings.elite_bias,
        walk_steps: settings.walk_steps,
        perturbation_ratio: settings.perturbation_ratio,
        max_generations: generations,
        seed,
    }
}

pub struct FailureRecord {
    pub strategy: String,
    pub run: usize,
    pub message: String,
}

pub struct ExperimentReport {
    pub failures: Vec<FailureRecord>,
}

/// Validated, ready-to-run experiment.
pub struct PreparedExperiment<'a> {
    config: &'a ExperimentConfig,
    plans: Vec<(StrategyConfig, EffectivePlan)>,
    dataset: Option<Dataset>,
}

/// Resolves budget plans and the dataset; every failure here is a
/// configuration error.
pub fn prepare(config: &ExperimentConfig) -> std::result::Result<PreparedExperiment<'_>, ConfigError> {
    let plans = config
        .strategies
        .iter()
        .map(|s| strategy_budget_map(s, config.budget, &config.space).map(|p| (s.clone(), p)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let dataset = match &config.objective {
        ObjectiveSpec::Synthetic(_) => None,
        ObjectiveSpec::Blobs {
            classes,
            per_class,
            spread,
            seed,
            ..
        } => {
            let data = make_blobs(*classes, *per_class, *spread, *seed)
                .map_err(|e| ConfigError(format!("blob dataset: {e}")))?;
            // validate the tuning-space shape once, up front
            ann_objective(data.clone(), &config.space, 0)
                .map_err(|e| ConfigError(format!("blobs objective: {e}")))?;
            Some(data)
        }
    };
    Ok(PreparedExperiment {
        config,
        plans,
        dataset,
    })
}

impl PreparedExperiment<'_> {
    pub fn plans(&self) -> &[(StrategyConfig, EffectivePlan)] {
        &self.plans
    }

    /// Executes every strategy x run, writes all output files, and reports
    /// per-run evaluation failures (failed runs are skipped in the summaries;
    /// the others proceed).
    pub fn execute(&self) -> Result<ExperimentReport> {
        let config = self.config;
        std::fs::create_dir_all(&config.output_dir)
            .with_context(|| format!("cannot create {}", config.output_dir.display()))?;

        if let (ObjectiveSpec::Blobs { dump: true, .. }, Some(dataset)) =
            (&config.objective, &self.dataset)
        {
            std::fs::write(config.output_dir.join("dataset.csv"), dataset.to_csv())?;
        }

        let mut failures = Vec::new();
        let mut logs: Vec<StrategyLog> = Vec::new();
        for (strategy, plan) in &self.plans {
            let label = strategy.kind.label();
            let mut runs = Vec::new();
            for run in 0..config.runs {
                match self.execute_run(strategy, plan, run) {
                    Ok(history) => runs.push((run, history)),
                    Err(message) => failures.push(FailureRecord {
                        strategy: label.to_string(),
                        run,
                        message,
                    }),
                }
            }
            logs.push(StrategyLog {
                label: label.to_string(),
                runs,
            });
        }

        self.write_outputs(&logs, &failures)?;
        Ok(ExperimentReport { failures })
    }

    fn execute_run(
        &self,
        strategy: &StrategyConfig,
        plan: &EffectivePlan,
        run: usize,
    ) -> std::result::Result<RunHistory, String> {
        let config = self.config;
        let label = strategy.kind.label();
        let run_seed = derive_seed(config.seed, label, run as u64);

        let objective: Box<dyn Objective> = match &config.objective {
            ObjectiveSpec::Synthetic(benchmark) => {
                Box::new(SyntheticObjective::new(*benchmark, config.space.len()))
            }
            ObjectiveSpec::Blobs { .. } => {
                let data = self.dataset.clone().expect("prepared with a dataset");
                Box::new(
                    ann_objective(data, &config.space, run_seed)
                        .map_err(|e| format!("run {run}: {e}"))?,
                )
            }
        };
        let counting = CountingObjective::with_limit(objective.as_ref(), config.budget);

        let result = match plan {
            EffectivePlan::Grid(grid) => grid_search(grid, &counting, label),
            EffectivePlan::Random { samples } => {
                random_search(&config.space, *samples, &counting, run_seed, label)
            }
            EffectivePlan::Evolution { generations } => brkga::run(
                &brkga_config(strategy, config.space.len(), *generations, run_seed),
                &counting,
                &config.space,
                label,
            )
            .map(|outcome| outcome.history),
        };
        result.map_err(|e| format!("run {run}: {e}"))
    }

    fn write_outputs(&self, logs: &[StrategyLog], failures: &[FailureRecord]) -> Result<()> {
        let out = &self.config.output_dir;
        let timing = self.config.timing;

        let mut summaries = Vec::new();
        let mut curve_columns = Vec::new();
        for log in logs {
            write_trials_csv(&out.join(format!("trials_{}.csv", log.label)), log, timing)?;
            write_trials_jsonl(&out.join(format!("trials_{}.jsonl", log.label)), log, timing)?;
            let histories: Vec<RunHistory> =
                log.runs.iter().map(|(_, h)| h.clone()).collect();
            if !histories.is_empty() {
                summaries.push(summarize(&histories)?);
                curve_columns.push((log.label.clone(), mean_curve(&histories)?));
            }
        }
        write_summary_csv(&out.join("summary.csv"), &summaries)?;
        write_curves_csv(&out.join("curves.csv"), &curve_columns)?;

        let mut comparisons = Vec::new();
        for i in 0..summaries.len() {
            for j in i + 1..summaries.len() {
                let (a, b) = (&summaries[i], &summaries[j]);
                if a.bests.len() >= 3 && b.bests.len() >= 3 {
                    let test = rank_sum_test(&a.bests, &b.bests, COMPARISON_ALPHA)?;
                    comparisons.push(ComparisonRow {
                        strategy_a: a.strategy.clone(),
                        strategy_b: b.strategy.clone(),
                        p_value: test.p_value,
                        reject: test.reject,
                    });
                }
            }
        }
        write_comparisons_csv(&out.join("comparisons.csv"), &comparisons)?;

        if !failures.is_empty() {
            let mut writer = csv::Writer::from_path(out.join("errors.csv"))?;
            writer.write_record(["strategy", "run", "message"])?;
            for f in failures {
                writer.write_record([&f.strategy, &f.run.to_string(), &f.message])?;
            }
            writer.flush()?;
        }
        Ok(())
    }
}

/// Runs the prepared experiment, optionally inside a fixed-size rayon pool.
/// Worker count never changes the outputs, only the wall time.
pub fn execute_with_workers(prepared: &PreparedExperiment<'_>, workers: usize) -> Result<ExperimentReport> {
    if workers == 0 {
        prepared.execute()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("cannot build worker pool")?;
        pool.install(|| prepared.execute())
    }
}
