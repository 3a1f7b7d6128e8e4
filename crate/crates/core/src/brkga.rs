//! Population mechanics of the hybrid optimizer: elite partition, mutant
//! injection, biased parameterized-uniform crossover, and the outer loop that
//! refines every member through the random-walk hook each generation.
//!
//! All randomness flows through per-purpose streams derived from the config
//! seed, so per-member refinement can run on any number of workers without
//! changing results. Every objective evaluation happens inside the refinement
//! hook: one run costs exactly `max_generations * population_size *
//! (1 + walk_steps)` evaluations.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hyperspace::{HyperSpace, HyperVector, KeyVector};
use crate::objective::{Objective, RunHistory, Score, TrialRecord};
use crate::random_walk::{RandomWalkRefiner, Refiner, WalkConfig, WalkEval};
use crate::rng::stream;
use crate::try_map_in_order;

/// A candidate solution: a key vector plus its cached score, present once the
/// individual has been through a refinement phase.
#[derive(Clone, Debug)]
pub struct Individual {
    pub keys: KeyVector,
    pub score: Option<Score>,
}

impl Individual {
    pub fn unscored(keys: KeyVector) -> Self {
        Self { keys, score: None }
    }

    fn random(dims: usize, rng: &mut impl Rng) -> Self {
        let keys: Vec<f64> = (0..dims).map(|_| rng.random()).collect();
        Self {
            keys: KeyVector::new(keys).expect("uniform draws lie in [0,1]"),
            score: None,
        }
    }
}

/// Fixed-size generation of individuals.
#[derive(Clone, Debug)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn from_members(members: Vec<Individual>) -> Self {
        Self { members }
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct BrkgaConfig {
    pub population_size: usize,
    pub elite_size: usize,
    pub mutant_size: usize,
    pub dims: usize,
    /// Probability that an offspring gene comes from the elite parent.
    pub elite_bias: f64,
    /// Random-walk steps per individual per generation; 0 disables refinement
    /// beyond the single scoring evaluation.
    pub walk_steps: usize,
    pub perturbation_ratio: f64,
    pub max_generations: usize,
    pub seed: u64,
}

impl BrkgaConfig {
    /// Standard small-budget settings: population 6, elite 2, mutant 1,
    /// elite bias 0.7, 3 walk steps at ratio 0.15, 10 generations — a 240
    /// evaluation budget.
    pub fn standard(dims: usize, seed: u64) -> Self {
        Self {
            population_size: 6,
            elite_size: 2,
            mutant_size: 1,
            dims,
            elite_bias: 0.7,
            walk_steps: 3,
            perturbation_ratio: 0.15,
            max_generations: 10,
            seed,
        }
    }

    /// Objective evaluations one full run will perform.
    pub fn evaluation_budget(&self) -> usize {
        self.max_generations * self.population_size * (1 + self.walk_steps)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dims == 0 {
            return fail("dimension count must be at least 1".into());
        }
        if self.elite_size == 0 {
            return fail("elite set must hold at least one individual".into());
        }
        if self.elite_size + self.mutant_size > self.population_size {
            return fail(format!(
                "elite ({}) + mutants ({}) exceed population size {}",
                self.elite_size, self.mutant_size, self.population_size
            ));
        }
        if self.elite_size >= self.population_size - self.elite_size {
            return fail(format!(
                "elite set ({}) must be strictly smaller than the non-elite set ({})",
                self.elite_size,
                self.population_size - self.elite_size
            ));
        }
        if !(self.elite_bias > 0.5 && self.elite_bias <= 1.0) {
            return fail(format!(
                "elite bias must lie in (0.5, 1], got {}",
                self.elite_bias
            ));
        }
        if !self.perturbation_ratio.is_finite() || self.perturbation_ratio < 0.0 {
            return fail(format!(
                "perturbation ratio must be non-negative, got {}",
                self.perturbation_ratio
            ));
        }
        if self.max_generations == 0 {
            return fail("at least one generation required".into());
        }
        Ok(())
    }
}

/// Fresh population of uniformly random key vectors, scores unset.
pub fn init_population(config: &BrkgaConfig, rng: &mut ChaCha8Rng) -> Result<Population> {
    config.validate()?;
    Ok(Population {
        members: (0..config.population_size)
            .map(|_| Individual::random(config.dims, rng))
            .collect(),
    })
}

/// `count` fresh uniformly random individuals, scores unset.
pub fn make_mutants(count: usize, dims: usize, rng: &mut impl Rng) -> Vec<Individual> {
    (0..count).map(|_| Individual::random(dims, rng)).collect()
}

/// Splits a fully scored population into (elite, non-elite) by ascending
/// score. The sort is stable, so equal scores keep their insertion order.
pub fn partition(pop: &Population, elite_size: usize) -> Result<(Vec<Individual>, Vec<Individual>)> {
    if elite_size == 0 || elite_size > pop.len() {
        return Err(Error::InvalidConfig(format!(
            "elite size {elite_size} invalid for population of {}",
            pop.len()
        )));
    }
    for (member, individual) in pop.members.iter().enumerate() {
        if individual.score.is_none() {
            return Err(Error::MissingScore { member });
        }
    }
    let mut sorted = pop.members.clone();
    sorted.sort_by(|a, b| {
        a.score
            .unwrap()
            .value()
            .partial_cmp(&b.score.unwrap().value())
            .expect("scores are finite")
    });
    let non_elite = sorted.split_off(elite_size);
    Ok((sorted, non_elite))
}

fn crossover_with_mask(
    elite: &Individual,
    other: &Individual,
    mask: &[bool],
) -> Result<Individual> {
    if elite.keys.len() != other.keys.len() {
        return Err(Error::LengthMismatch {
            what: "parent key vectors",
            left: elite.keys.len(),
            right: other.keys.len(),
        });
    }
    let keys: Vec<f64> = mask
        .iter()
        .zip(elite.keys.keys().iter().zip(other.keys.keys()))
        .map(|(&from_elite, (&a, &b))| if from_elite { a } else { b })
        .collect();
    Ok(Individual::unscored(KeyVector::new(keys)?))
}

/// Parameterized uniform crossover: each gene comes from the elite parent
/// with probability `elite_bias`, else from the other parent. Score unset.
pub fn crossover(
    elite: &Individual,
    other: &Individual,
    elite_bias: f64,
    rng: &mut impl Rng,
) -> Result<Individual> {
    if !(0.0..=1.0).contains(&elite_bias) {
        return Err(Error::InvalidConfig(format!(
            "crossover probability must lie in [0, 1], got {elite_bias}"
        )));
    }
    let mask: Vec<bool> = (0..elite.keys.len())
        .map(|_| rng.random_bool(elite_bias))
        .collect();
    crossover_with_mask(elite, other, &mask)
}

/// Result of advancing one generation.
#[derive(Debug)]
pub struct StepOutcome {
    /// Next generation: elite (scores kept), then mutants, then offspring.
    pub next: Population,
    /// Best refined individual of the current generation (minimum score).
    pub best: Individual,
    /// Every objective evaluation performed, in deterministic member order.
    pub evals: Vec<WalkEval>,
}

/// Refines every member, partitions by score, and assembles the next
/// generation as elite + mutants + biased offspring.
pub fn step_generation(
    pop: &Population,
    config: &BrkgaConfig,
    refine: &dyn Refiner,
    generation: usize,
) -> Result<StepOutcome> {
    config.validate()?;
    if pop.len() != config.population_size {
        return Err(Error::LengthMismatch {
            what: "population vs configured size",
            left: pop.len(),
            right: config.population_size,
        });
    }

    // Per-member streams keep results independent of evaluation concurrency.
    let refined: Vec<(Individual, Vec<WalkEval>)> = try_map_in_order(pop.len(), |member| {
        let stream_index = (generation * config.population_size + member) as u64;
        let mut rng = stream(config.seed, "walk", stream_index);
        refine
            .refine(&pop.members[member].keys, &mut rng)
            .map(|out| {
                (
                    Individual {
                        keys: out.keys,
                        score: Some(out.score),
                    },
                    out.evals,
                )
            })
            .map_err(|e| e.in_context(format!("generation {generation}, member {member}")))
    })?;

    let mut evals = Vec::with_capacity(pop.len());
    let mut scored = Vec::with_capacity(pop.len());
    for (individual, walk_evals) in refined {
        scored.push(individual);
        evals.extend(walk_evals);
    }
    let scored = Population { members: scored };

    let (elite, non_elite) = partition(&scored, config.elite_size)?;
    let best = elite[0].clone();

    let mut mutant_rng = stream(config.seed, "mutant", generation as u64);
    let mutants = make_mutants(config.mutant_size, config.dims, &mut mutant_rng);

    let offspring_count = config.population_size - config.elite_size - config.mutant_size;
    let mut crossover_rng = stream(config.seed, "crossover", generation as u64);
    let mut next = elite.clone();
    next.extend(mutants);
    for _ in 0..offspring_count {
        let parent_a = &elite[crossover_rng.random_range(0..elite.len())];
        let parent_b = &non_elite[crossover_rng.random_range(0..non_elite.len())];
        next.push(crossover(parent_a, parent_b, config.elite_bias, &mut crossover_rng)?);
    }

    Ok(StepOutcome {
        next: Population { members: next },
        best,
        evals,
    })
}

/// Full optimization run.
#[derive(Debug)]
pub struct BrkgaOutcome {
    pub best_gamma: HyperVector,
    pub best_keys: KeyVector,
    pub best_score: Score,
    pub history: RunHistory,
}

/// Runs `max_generations` generations and returns the decoded global best
/// (tracked under strict `<` comparison) plus the full evaluation log.
pub fn run(
    config: &BrkgaConfig,
    objective: &dyn Objective,
    space: &HyperSpace,
    label: &str,
) -> Result<BrkgaOutcome> {
    config.validate()?;
    if config.dims != space.len() {
        return Err(Error::LengthMismatch {
            what: "config dims vs space",
            left: config.dims,
            right: space.len(),
        });
    }
    if objective.dims() != space.len() {
        return Err(Error::LengthMismatch {
            what: "objective dims vs space",
            left: objective.dims(),
            right: space.len(),
        });
    }

    let walk = WalkConfig::new(config.walk_steps, config.perturbation_ratio)?;
    let refiner = RandomWalkRefiner {
        walk,
        objective,
        space,
    };

    let mut init_rng = stream(config.seed, "init", 0);
    let mut pop = init_population(config, &mut init_rng)?;
    let mut history = RunHistory::new();
    let mut best: Option<Individual> = None;

    for generation in 0..config.max_generations {
        let step = step_generation(&pop, config, &refiner, generation)?;
        for eval in step.evals {
            let trial_index = history.len();
            history.record_trial(TrialRecord {
                strategy: label.to_string(),
                trial_index,
                gamma: eval.gamma,
                score: eval.score,
                wall_time: eval.wall_time,
            })?;
        }
        let improves = best.as_ref().is_none_or(|incumbent| {
            step.best.score.unwrap().value() < incumbent.score.unwrap().value()
        });
        if improves {
            best = Some(step.best);
        }
        pop = step.next;
    }

    let best = best.expect("at least one generation ran");
    Ok(BrkgaOutcome {
        best_gamma: space.decode(&best.keys)?,
        best_score: best.score.expect("generation best is always scored"),
        best_keys: best.keys,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{Benchmark, SyntheticObjective};
    use crate::hyperspace::DimensionSpec;
    use crate::objective::CountingObjective;
    use crate::random_walk::WalkOutcome;

    fn space(dims: usize) -> HyperSpace {
        let specs = (0..dims)
            .map(|i| DimensionSpec::real(format!("x{i}"), -5.12, 5.12).unwrap())
            .collect();
        HyperSpace::new(specs).unwrap()
    }

    fn scored(keys: Vec<f64>, score: f64) -> Individual {
        Individual {
            keys: KeyVector::new(keys).unwrap(),
            score: Some(Score::new(score).unwrap()),
        }
    }

    /// Hook that scores the decoded point once and never moves it.
    struct ScoreOnly<'a> {
        objective: &'a dyn Objective,
        space: &'a HyperSpace,
    }

    impl Refiner for ScoreOnly<'_> {
        fn refine(&self, keys: &KeyVector, _rng: &mut ChaCha8Rng) -> Result<WalkOutcome> {
            let gamma = self.space.decode(keys)?;
            let score = self.objective.evaluate(&gamma)?;
            Ok(WalkOutcome {
                keys: self.space.encode(&gamma)?,
                score,
                evals: vec![crate::random_walk::WalkEval {
                    gamma,
                    score,
                    wall_time: 0.0,
                }],
            })
        }
    }

    #[test]
    fn init_population_shape_and_range() {
        let config = BrkgaConfig::standard(5, 7);
        let mut rng = stream(config.seed, "init", 0);
        let pop = init_population(&config, &mut rng).unwrap();
        assert_eq!(pop.len(), 6);
        for member in pop.members() {
            assert_eq!(member.keys.len(), 5);
            assert!(member.score.is_none());
            assert!(member.keys.keys().iter().all(|k| (0.0..=1.0).contains(k)));
        }
    }

    #[test]
    fn init_population_deterministic() {
        let config = BrkgaConfig::standard(5, 99);
        let a = init_population(&config, &mut stream(99, "init", 0)).unwrap();
        let b = init_population(&config, &mut stream(99, "init", 0)).unwrap();
        for (x, y) in a.members().iter().zip(b.members()) {
            assert_eq!(x.keys.keys(), y.keys.keys());
        }
    }

    #[test]
    fn init_keys_center_near_half() {
        // 200 individuals x 500 dims = 1e5 draws
        let config = BrkgaConfig {
            population_size: 200,
            elite_size: 50,
            mutant_size: 20,
            dims: 500,
            ..BrkgaConfig::standard(500, 2024)
        };
        let pop = init_population(&config, &mut stream(2024, "init", 0)).unwrap();
        let (sum, n) = pop
            .members()
            .iter()
            .flat_map(|m| m.keys.keys())
            .fold((0.0, 0usize), |(s, n), &k| (s + k, n + 1));
        assert_eq!(n, 100_000);
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn partition_takes_score_prefix() {
        let pop = Population::from_members(vec![
            scored(vec![0.1], 0.3),
            scored(vec![0.2], 0.1),
            scored(vec![0.3], 0.2),
            scored(vec![0.4], 0.5),
        ]);
        let (elite, non_elite) = partition(&pop, 2).unwrap();
        let elite_scores: Vec<f64> = elite.iter().map(|i| i.score.unwrap().value()).collect();
        assert_eq!(elite_scores, vec![0.1, 0.2]);
        assert_eq!(non_elite.len(), 2);
        let max_elite = elite_scores.iter().cloned().fold(f64::MIN, f64::max);
        assert!(non_elite
            .iter()
            .all(|i| i.score.unwrap().value() >= max_elite));
    }

    #[test]
    fn partition_ties_keep_insertion_order() {
        let pop = Population::from_members(vec![
            scored(vec![0.1], 1.0),
            scored(vec![0.2], 1.0),
            scored(vec![0.3], 1.0),
            scored(vec![0.4], 1.0),
        ]);
        let (elite, _) = partition(&pop, 2).unwrap();
        assert_eq!(elite[0].keys.keys(), &[0.1]);
        assert_eq!(elite[1].keys.keys(), &[0.2]);
    }

    #[test]
    fn partition_requires_scores() {
        let pop = Population::from_members(vec![
            scored(vec![0.1], 1.0),
            Individual::unscored(KeyVector::new(vec![0.2]).unwrap()),
        ]);
        assert!(matches!(
            partition(&pop, 1),
            Err(Error::MissingScore { member: 1 })
        ));
    }

    #[test]
    fn mutants_shape_and_uniformity() {
        let mut rng = stream(5, "mutant", 0);
        assert!(make_mutants(0, 5, &mut rng).is_empty());
        let one = make_mutants(1, 5, &mut rng);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].keys.len(), 5);
        assert!(one[0].score.is_none());

        // Kolmogorov-Smirnov uniformity check over 1e4 draws, alpha = 0.01
        let mutants = make_mutants(2000, 5, &mut rng);
        let mut draws: Vec<f64> = mutants
            .iter()
            .flat_map(|m| m.keys.keys())
            .copied()
            .collect();
        assert_eq!(draws.len(), 10_000);
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = draws.len() as f64;
        let stat = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let hi = (i as f64 + 1.0) / n - x;
                let lo = x - i as f64 / n;
                hi.max(lo)
            })
            .fold(0.0, f64::max);
        let critical = 1.62762 / n.sqrt();
        assert!(stat < critical, "KS statistic {stat} >= {critical}");
    }

    #[test]
    fn crossover_mask_selects_per_gene() {
        let a = scored(vec![0.1, 0.2, 0.3], 0.0);
        let b = scored(vec![0.9, 0.8, 0.7], 1.0);
        let child = crossover_with_mask(&a, &b, &[true, false, true]).unwrap();
        assert_eq!(child.keys.keys(), &[0.1, 0.8, 0.3]);
        assert!(child.score.is_none());
    }

    #[test]
    fn crossover_bias_one_clones_elite() {
        let a = scored(vec![0.1, 0.2, 0.3], 0.0);
        let b = scored(vec![0.9, 0.8, 0.7], 1.0);
        let child = crossover(&a, &b, 1.0, &mut stream(1, "crossover", 0)).unwrap();
        assert_eq!(child.keys.keys(), a.keys.keys());
    }

    #[test]
    fn crossover_rejects_length_mismatch() {
        let a = scored(vec![0.1, 0.2], 0.0);
        let b = scored(vec![0.9], 1.0);
        assert!(matches!(
            crossover(&a, &b, 0.7, &mut stream(1, "crossover", 0)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn crossover_inheritance_rate_matches_bias() {
        // 1e5 gene draws; elite genes are 1.0, others 0.0
        let a = scored(vec![1.0; 100], 0.0);
        let b = scored(vec![0.0; 100], 1.0);
        let mut rng = stream(77, "crossover", 0);
        let mut from_elite = 0usize;
        for _ in 0..1000 {
            let child = crossover(&a, &b, 0.7, &mut rng).unwrap();
            from_elite += child.keys.keys().iter().filter(|&&k| k == 1.0).count();
        }
        let rate = from_elite as f64 / 100_000.0;
        assert!((rate - 0.7).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn step_generation_composition() {
        let space = space(5);
        let objective = SyntheticObjective::new(Benchmark::Sphere, 5);
        let config = BrkgaConfig::standard(5, 3);
        let pop = init_population(&config, &mut stream(3, "init", 0)).unwrap();
        let hook = ScoreOnly {
            objective: &objective,
            space: &space,
        };
        let step = step_generation(&pop, &config, &hook, 0).unwrap();
        // 2 elite + 1 mutant + 3 offspring
        assert_eq!(step.next.len(), 6);
        assert_eq!(step.evals.len(), 6); // score-only hook: one eval per member
        assert!(step.next.members()[..2].iter().all(|m| m.score.is_some()));
        assert!(step.next.members()[2..].iter().all(|m| m.score.is_none()));
    }

    #[test]
    fn generation_best_monotone_under_score_only_hook() {
        let space = space(5);
        let objective = SyntheticObjective::new(Benchmark::Rastrigin, 5);
        let config = BrkgaConfig {
            walk_steps: 0,
            ..BrkgaConfig::standard(5, 11)
        };
        let hook = ScoreOnly {
            objective: &objective,
            space: &space,
        };
        let mut pop = init_population(&config, &mut stream(11, "init", 0)).unwrap();
        let mut previous_best = f64::INFINITY;
        for generation in 0..8 {
            let step = step_generation(&pop, &config, &hook, generation).unwrap();
            let best = step.best.score.unwrap().value();
            assert!(best <= previous_best, "gen {generation}: {best} > {previous_best}");
            previous_best = best;
            pop = step.next;
        }
    }

    #[test]
    fn run_consumes_exact_budget() {
        let space = space(5);
        let objective = SyntheticObjective::new(Benchmark::Sphere, 5);
        let counting = CountingObjective::new(&objective);
        let config = BrkgaConfig::standard(5, 42);
        let outcome = run(&config, &counting, &space, "hbrkga").unwrap();
        assert_eq!(counting.count(), 240);
        assert_eq!(outcome.history.len(), 240);
    }

    #[test]
    fn single_generation_no_walk() {
        let space = space(5);
        let objective = SyntheticObjective::new(Benchmark::Sphere, 5);
        let counting = CountingObjective::new(&objective);
        let config = BrkgaConfig {
            walk_steps: 0,
            max_generations: 1,
            ..BrkgaConfig::standard(5, 42)
        };
        let outcome = run(&config, &counting, &space, "brkga").unwrap();
        assert_eq!(counting.count(), 6);
        // the best is the population minimum
        let min = outcome
            .history
            .trials()
            .iter()
            .map(|t| t.score.value())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(outcome.best_score.value(), min);
    }

    #[test]
    fn run_is_deterministic() {
        let space = space(5);
        let objective = SyntheticObjective::new(Benchmark::Sphere, 5);
        let config = BrkgaConfig::standard(5, 123);
        let a = run(&config, &objective, &space, "hbrkga").unwrap();
        let b = run(&config, &objective, &space, "hbrkga").unwrap();
        assert_eq!(a.best_gamma.values(), b.best_gamma.values());
        assert_eq!(a.best_score.value(), b.best_score.value());
        let scores_a: Vec<f64> = a.history.trials().iter().map(|t| t.score.value()).collect();
        let scores_b: Vec<f64> = b.history.trials().iter().map(|t| t.score.value()).collect();
        assert_eq!(scores_a, scores_b);
    }

    #[test]
    fn run_improves_over_first_generation() {
        let space = space(5);
        let objective = SyntheticObjective::new(Benchmark::Sphere, 5);
        let config = BrkgaConfig::standard(5, 7);
        let outcome = run(&config, &objective, &space, "hbrkga").unwrap();
        let first_gen_best = outcome.history.trials()[..24]
            .iter()
            .map(|t| t.score.value())
            .fold(f64::INFINITY, f64::min);
        assert!(outcome.best_score.value() <= first_gen_best);
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let mut config = BrkgaConfig::standard(5, 0);
        config.elite_size = 3; // 3 >= 6 - 3
        assert!(config.validate().is_err());

        let mut config = BrkgaConfig::standard(5, 0);
        config.elite_bias = 0.5;
        assert!(config.validate().is_err());

        let mut config = BrkgaConfig::standard(5, 0);
        config.elite_bias = 1.25;
        assert!(config.validate().is_err());

        let mut config = BrkgaConfig::standard(5, 0);
        config.max_generations = 0;
        assert!(config.validate().is_err());

        let mut config = BrkgaConfig::standard(5, 0);
        config.mutant_size = 5; // 2 + 5 > 6
        assert!(config.validate().is_err());
    }

    #[test]
    fn population_size_invariant_across_generations() {
        let space = space(3);
        let objective = SyntheticObjective::new(Benchmark::Rastrigin, 3);
        let config = BrkgaConfig {
            dims: 3,
            ..BrkgaConfig::standard(3, 17)
        };
        let hook = ScoreOnly {
            objective: &objective,
            space: &space,
        };
        let mut pop = init_population(&config, &mut stream(17, "init", 0)).unwrap();
        for generation in 0..5 {
            let step = step_generation(&pop, &config, &hook, generation).unwrap();
            assert_eq!(step.next.len(), config.population_size);
            pop = step.next;
        }
    }
}
