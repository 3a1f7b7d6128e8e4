//! Synthetic objective surfaces: fast, deterministic stand-ins for expensive
//! learners, evaluated on the decoded (possibly integer-snapped) coordinates.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hyperspace::HyperVector;
use crate::objective::{Objective, Score};

/// `sum(x_i^2)`; global minimum 0 at the origin.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `10 n + sum(x_i^2 - 10 cos(2 pi x_i))`; highly multimodal, global minimum
/// 0 at the origin. Conventional domain `[-5.12, 5.12]`.
pub fn rastrigin(x: &[f64]) -> f64 {
    const A: f64 = 10.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    A * x.len() as f64
        + x.iter()
            .map(|&v| v * v - A * (two_pi * v).cos())
            .sum::<f64>()
}

/// Chained Rosenbrock valley; global minimum 0 at all-ones.
pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Sphere,
    Rastrigin,
    Rosenbrock,
}

impl Benchmark {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sphere" => Some(Self::Sphere),
            "rastrigin" => Some(Self::Rastrigin),
            "rosenbrock" => Some(Self::Rosenbrock),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Rastrigin => "rastrigin",
            Self::Rosenbrock => "rosenbrock",
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Self::Sphere => sphere(x),
            Self::Rastrigin => rastrigin(x),
            Self::Rosenbrock => rosenbrock(x),
        }
    }
}

/// [`Objective`] adapter over a benchmark surface.
pub struct SyntheticObjective {
    benchmark: Benchmark,
    dims: usize,
}

impl SyntheticObjective {
    pub fn new(benchmark: Benchmark, dims: usize) -> Self {
        Self { benchmark, dims }
    }
}

impl Objective for SyntheticObjective {
    fn evaluate(&self, gamma: &HyperVector) -> Result<Score> {
        Score::new(self.benchmark.eval(gamma.values()))
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn descriptor(&self) -> &str {
        self.benchmark.name()
    }
}
