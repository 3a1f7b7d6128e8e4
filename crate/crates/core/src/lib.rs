//! Black-box hyperparameter optimization built around random-key encoding:
//! a biased random-key genetic algorithm whose individuals are refined each
//! generation by a short random-walk over the decoded hyperparameter space,
//! plus grid-search and random-search baselines, synthetic benchmark
//! objectives, a small tunable neural classifier, and rank-sum comparison
//! tooling for multi-run experiments.
//!
//! Candidates live in `[0,1]^n` (one key per hyperparameter) and are decoded
//! through a typed, bounded [`hyperspace::HyperSpace`]. Scores are always
//! minimized; maximized metrics enter through [`objective::wrap_maximize`].
//! All randomness is derived from per-purpose streams, so results never
//! depend on worker count or completion order.
//!
//! ```
//! use hbrkga::benchmarks::{Benchmark, SyntheticObjective};
//! use hbrkga::brkga::{run, BrkgaConfig};
//! use hbrkga::hyperspace::{DimensionSpec, HyperSpace};
//!
//! let space = HyperSpace::new(
//!     (0..5)
//!         .map(|i| DimensionSpec::real(format!("x{i}"), -5.12, 5.12).unwrap())
//!         .collect(),
//! )
//! .unwrap();
//! let objective = SyntheticObjective::new(Benchmark::Sphere, 5);
//! let outcome = run(&BrkgaConfig::standard(5, 42), &objective, &space, "hbrkga").unwrap();
//! assert_eq!(outcome.history.len(), 240); // 10 generations x 6 members x (1 + 3 walk steps)
//! ```

pub mod baselines;
pub mod benchmarks;
pub mod brkga;
pub mod error;
pub mod hyperspace;
pub mod learner;
pub mod objective;
pub mod random_walk;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use hyperspace::{DimensionKind, DimensionSpec, HyperSpace, HyperVector, KeyVector};
pub use objective::{wrap_maximize, CountingObjective, Objective, RunHistory, Score, TrialRecord};

/// Maps `f` over `0..n`, preserving index order in the output. Runs on the
/// current rayon pool when the `parallel` feature is enabled; the sequential
/// fallback produces identical results by construction.
pub(crate) fn try_map_in_order<U, F>(n: usize, f: F) -> Result<Vec<U>>
where
    U: Send,
    F: Fn(usize) -> Result<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
