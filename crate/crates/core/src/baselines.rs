//! Grid and random search baselines under the same evaluation contract and
//! budget discipline as the evolutionary strategy.

use crate::error::{Error, Result};
use crate::hyperspace::{HyperSpace, HyperVector};
use crate::objective::{timed_evaluate, Objective, RunHistory, TrialRecord};
use crate::rng::stream;
use crate::try_map_in_order;

/// Explicit per-dimension value lists; the plan enumerates their Cartesian
/// product.
#[derive(Clone, Debug)]
pub struct GridPlan {
    values: Vec<Vec<f64>>,
}

impl GridPlan {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput { what: "grid plan" });
        }
        if values.iter().any(|v| v.is_empty()) {
            return Err(Error::InvalidConfig(
                "every grid dimension needs at least one value".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Builds the plan from a space whose dimensions all carry grid values.
    pub fn from_space(space: &HyperSpace) -> Result<Self> {
        let values = space
            .dims()
            .iter()
            .map(|dim| {
                dim.grid_values()
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "dimension `{}` has no grid values",
                            dim.name()
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn combination_count(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    /// The `index`-th combination in lexicographic order over dimension
    /// indices, last dimension fastest.
    fn combination(&self, index: usize) -> HyperVector {
        let mut remaining = index;
        let mut values = vec![0.0; self.values.len()];
        for (dim, list) in self.values.iter().enumerate().rev() {
            values[dim] = list[remaining % list.len()];
            remaining /= list.len();
        }
        HyperVector::new(values)
    }
}

/// Evaluates every combination exactly once, in lexicographic order.
/// Evaluation may be concurrent; the log order is the plan order.
pub fn grid_search(plan: &GridPlan, objective: &dyn Objective, label: &str) -> Result<RunHistory> {
    let total = plan.combination_count();
    let scored = try_map_in_order(total, |index| {
        let gamma = plan.combination(index);
        timed_evaluate(objective, &gamma)
            .map(|(score, wall_time)| (gamma, score, wall_time))
            .map_err(|e| e.in_context(format!("grid trial {index}")))
    })?;

    let mut history = RunHistory::new();
    for (trial_index, (gamma, score, wall_time)) in scored.into_iter().enumerate() {
        history.record_trial(TrialRecord {
            strategy: label.to_string(),
            trial_index,
            gamma,
            score,
            wall_time,
        })?;
    }
    Ok(history)
}

/// `budget` independent samples, each dimension uniform over its subrange and
/// then snapped to the dimension type. Endpoint values of integer dimensions
/// thus receive half-width probability mass.
pub fn random_search(
    space: &HyperSpace,
    budget: usize,
    objective: &dyn Objective,
    seed: u64,
    label: &str,
) -> Result<RunHistory> {
    if budget == 0 {
        return Err(Error::InvalidConfig("budget must be at least 1".into()));
    }

    let scored = try_map_in_order(budget, |trial| {
        let gamma = sample_point(space, seed, trial as u64)?;
        timed_evaluate(objective, &gamma)
            .map(|(score, wall_time)| (gamma, score, wall_time))
            .map_err(|e| e.in_context(format!("random trial {trial}")))
    })?;

    let mut history = RunHistory::new();
    for (trial_index, (gamma, score, wall_time)) in scored.into_iter().enumerate() {
        history.record_trial(TrialRecord {
            strategy: label.to_string(),
            trial_index,
            gamma,
            score,
            wall_time,
        })?;
    }
    Ok(history)
}

fn sample_point(space: &HyperSpace, seed: u64, trial: u64) -> Result<HyperVector> {
    use rand::Rng;
    let mut rng = stream(seed, "random-search", trial);
    let mut values = Vec::with_capacity(space.len());
    for (i, dim) in space.dims().iter().enumerate() {
        let raw: f64 = rng.random_range(dim.min()..=dim.max());
        values.push(space.round_to(i, raw)?);
    }
    Ok(HyperVector::new(values))
}
