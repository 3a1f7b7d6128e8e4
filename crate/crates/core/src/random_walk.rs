//! Stochastic neighborhood refinement: a fixed-length perturbation chain over
//! decoded hyperparameter vectors, keeping the best candidate seen.
//!
//! Perturbations act in hyperparameter units, not key units; the refined
//! point is re-encoded only on exit. A single walk is strictly sequential,
//! but distinct walks are independent given separate random streams.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hyperspace::{HyperSpace, HyperVector, KeyVector};
use crate::objective::{timed_evaluate, Objective, Score};

#[derive(Clone, Copy, Debug)]
pub struct WalkConfig {
    /// Number of perturbation steps per walk.
    pub steps: usize,
    /// Scales the perturbation interval width relative to the component value.
    pub perturbation_ratio: f64,
}

impl WalkConfig {
    pub fn new(steps: usize, perturbation_ratio: f64) -> Result<Self> {
        if !perturbation_ratio.is_finite() || perturbation_ratio < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "perturbation ratio must be a non-negative real, got {perturbation_ratio}"
            )));
        }
        Ok(Self {
            steps,
            perturbation_ratio,
        })
    }
}

/// Width of the perturbation interval for one component. The interval
/// `[0, |v|(1+ratio)]` collapses at v = 0 and would freeze the dimension, so
/// the width is floored at 1% of the dimension span.
fn perturbation_width(value: f64, ratio: f64, span: f64) -> f64 {
    (value.abs() * (1.0 + ratio)).max(0.01 * span)
}

/// Deterministic movement kernel: adds `sign * magnitude` to component `dim`
/// and snaps the result back into the space.
fn apply_movement(
    gamma: &HyperVector,
    space: &HyperSpace,
    dim: usize,
    negative: bool,
    magnitude: f64,
) -> Result<HyperVector> {
    let mut values = gamma.values().to_vec();
    let sign = if negative { -1.0 } else { 1.0 };
    values[dim] = space.round_to(dim, values[dim] + sign * magnitude)?;
    Ok(HyperVector::new(values))
}

/// Perturbs exactly one component of `gamma`, chosen uniformly at random.
///
/// Draw order is fixed for reproducibility: dimension index, then sign
/// (Bernoulli(0.5), true meaning negative), then magnitude uniform on the
/// closed interval `[0, width]`.
pub fn movement(
    gamma: &HyperVector,
    space: &HyperSpace,
    perturbation_ratio: f64,
    rng: &mut impl Rng,
) -> Result<HyperVector> {
    let dim = rng.random_range(0..space.len());
    let negative = rng.random_bool(0.5);
    let (min, max) = space.dim_bounds(dim)?;
    let width = perturbation_width(gamma.values()[dim], perturbation_ratio, max - min);
    let magnitude = rng.random_range(0.0..=width);
    apply_movement(gamma, space, dim, negative, magnitude)
}

/// One objective evaluation performed inside a walk.
#[derive(Clone, Debug)]
pub struct WalkEval {
    pub gamma: HyperVector,
    pub score: Score,
    pub wall_time: f64,
}

/// Result of one walk: the re-encoded incumbent, its score, and every
/// evaluation performed (exactly `1 + steps` of them), in order.
#[derive(Clone, Debug)]
pub struct WalkOutcome {
    pub keys: KeyVector,
    pub score: Score,
    pub evals: Vec<WalkEval>,
}

/// Decodes `keys`, evaluates once, then runs `steps` movement iterations.
/// The chain always continues from the perturbed point, but the incumbent is
/// replaced only by a strictly better (lower) score. Returns the incumbent
/// encoded back into key space.
pub fn random_walk(
    keys: &KeyVector,
    walk: &WalkConfig,
    objective: &dyn Objective,
    space: &HyperSpace,
    rng: &mut impl Rng,
) -> Result<WalkOutcome> {
    let mut incumbent = space.decode(keys)?;
    let (mut best, wall_time) = timed_evaluate(objective, &incumbent)?;
    let mut evals = Vec::with_capacity(1 + walk.steps);
    evals.push(WalkEval {
        gamma: incumbent.clone(),
        score: best,
        wall_time,
    });

    let mut chain = incumbent.clone();
    for _ in 0..walk.steps {
        chain = movement(&chain, space, walk.perturbation_ratio, rng)?;
        let (score, wall_time) = timed_evaluate(objective, &chain)?;
        evals.push(WalkEval {
            gamma: chain.clone(),
            score,
            wall_time,
        });
        if score.value() < best.value() {
            best = score;
            incumbent = chain.clone();
        }
    }

    Ok(WalkOutcome {
        keys: space.encode(&incumbent)?,
        score: best,
        evals,
    })
}

/// Refinement hook applied to every population member each generation.
/// The production implementation is [`RandomWalkRefiner`]; tests substitute
/// doubles to control evaluation counts.
pub trait Refiner: Sync {
    fn refine(&self, keys: &KeyVector, rng: &mut rand_chacha::ChaCha8Rng) -> Result<WalkOutcome>;
}

pub struct RandomWalkRefiner<'a> {
    pub walk: WalkConfig,
    pub objective: &'a dyn Objective,
    pub space: &'a HyperSpace,
}

impl Refiner for RandomWalkRefiner<'_> {
    fn refine(&self, keys: &KeyVector, rng: &mut rand_chacha::ChaCha8Rng) -> Result<WalkOutcome> {
        random_walk(keys, &self.walk, self.objective, self.space, rng)
    }
}
