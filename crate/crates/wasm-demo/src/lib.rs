//! wasm-bindgen surface for the browser demo. Three operations: sample an
//! objective surface for a heatmap, run one optimization strategy on it, and
//! decode key vectors through a user-defined space.
//!
//! All payloads are JSON strings so the page needs no generated TypeScript.
//! The `_impl` functions are plain Rust and covered by native tests; the
//! exported wrappers only translate errors for JS.

use hbrkga::baselines::random_search;
use hbrkga::benchmarks::{Benchmark, SyntheticObjective};
use hbrkga::brkga::{run, BrkgaConfig};
use hbrkga::hyperspace::{DimensionSpec, HyperSpace, HyperVector, KeyVector};
use hbrkga::objective::RunHistory;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::wasm_bindgen;

/// Objective values on an `nx` x `ny` grid over the given rectangle,
/// row-major with the y axis varying slowest.
#[wasm_bindgen]
pub fn objective_field(
    name: &str,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, wasm_bindgen::JsError> {
    objective_field_impl(name, x_min, x_max, y_min, y_max, nx, ny)
        .map_err(|e| wasm_bindgen::JsError::new(&e))
}

fn objective_field_impl(
    name: &str,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, String> {
    let benchmark =
        Benchmark::from_name(name).ok_or_else(|| format!("unknown objective `{name}`"))?;
    if nx < 2 || ny < 2 || nx * ny > 4_000_000 {
        return Err("field resolution must be between 2x2 and ~2000x2000".into());
    }
    let mut field = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        let y = y_min + (y_max - y_min) * row as f64 / (ny - 1) as f64;
        for col in 0..nx {
            let x = x_min + (x_max - x_min) * col as f64 / (nx - 1) as f64;
            field.push(benchmark.eval(&[x, y]));
        }
    }
    Ok(field)
}

#[derive(Deserialize)]
struct StrategyParams {
    objective: String,
    strategy: String,
    seed: u64,
    bounds: (f64, f64),
    #[serde(default = "default_population")]
    population_size: usize,
    #[serde(default = "default_elite")]
    elite_size: usize,
    #[serde(default = "default_mutants")]
    mutant_size: usize,
    #[serde(default = "default_bias")]
    elite_bias: f64,
    #[serde(default = "default_walk_steps")]
    walk_steps: usize,
    #[serde(default = "default_ratio")]
    perturbation_ratio: f64,
    #[serde(default = "default_generations")]
    generations: usize,
}

fn default_population() -> usize {
    6
}
fn default_elite() -> usize {
    2
}
fn default_mutants() -> usize {
    1
}
fn default_bias() -> f64 {
    0.7
}
fn default_walk_steps() -> usize {
    3
}
fn default_ratio() -> f64 {
    0.15
}
fn default_generations() -> usize {
    10
}

#[derive(Serialize)]
struct TrialPoint {
    x: f64,
    y: f64,
    score: f64,
    best: f64,
}

#[derive(Serialize)]
struct StrategyOutcome {
    evaluations: usize,
    trials: Vec<TrialPoint>,
    best: TrialPoint,
}

/// Runs one strategy on a 2-D benchmark and returns every evaluated point
/// plus the best-so-far curve, as JSON.
#[wasm_bindgen]
pub fn run_strategy(params_json: &str) -> Result<String, wasm_bindgen::JsError> {
    run_strategy_impl(params_json).map_err(|e| wasm_bindgen::JsError::new(&e))
}

fn run_strategy_impl(params_json: &str) -> Result<String, String> {
    let params: StrategyParams =
        serde_json::from_str(params_json).map_err(|e| format!("bad parameters: {e}"))?;
    let benchmark = Benchmark::from_name(&params.objective)
        .ok_or_else(|| format!("unknown objective `{}`", params.objective))?;
    let (lo, hi) = params.bounds;
    let space = HyperSpace::new(vec![
        DimensionSpec::real("x", lo, hi).map_err(|e| e.to_string())?,
        DimensionSpec::real("y", lo, hi).map_err(|e| e.to_string())?,
    ])
    .map_err(|e| e.to_string())?;
    let objective = SyntheticObjective::new(benchmark, 2);

    let walk_steps = match params.strategy.as_str() {
        "hbrkga" => params.walk_steps,
        "brkga" | "random" => 0,
        other => return Err(format!("unknown strategy `{other}`")),
    };
    let history: RunHistory = if params.strategy == "random" {
        // same budget the fully configured hybrid would spend
        let budget = params.generations * params.population_size * (1 + params.walk_steps);
        random_search(&space, budget, &objective, params.seed, "random")
            .map_err(|e| e.to_string())?
    } else {
        let config = BrkgaConfig {
            population_size: params.population_size,
            elite_size: params.elite_size,
            mutant_size: params.mutant_size,
            dims: 2,
            elite_bias: params.elite_bias,
            walk_steps,
            perturbation_ratio: params.perturbation_ratio,
            max_generations: params.generations,
            seed: params.seed,
        };
        run(&config, &objective, &space, &params.strategy)
            .map_err(|e| e.to_string())?
            .history
    };

    let trials: Vec<TrialPoint> = history
        .trials()
        .iter()
        .zip(history.best_so_far())
        .map(|(t, b)| TrialPoint {
            x: t.gamma.values()[0],
            y: t.gamma.values()[1],
            score: t.score.value(),
            best: b.value(),
        })
        .collect();
    let best_trial = history.best_trial().ok_or("no trials were recorded")?;
    let outcome = StrategyOutcome {
        evaluations: trials.len(),
        best: TrialPoint {
            x: best_trial.gamma.values()[0],
            y: best_trial.gamma.values()[1],
            score: best_trial.score.value(),
            best: best_trial.score.value(),
        },
        trials,
    };
    serde_json::to_string(&outcome).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
struct DecodeRequest {
    space: Vec<RawDimension>,
    keys: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDimension {
    name: String,
    kind: String,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct DecodeResponse {
    values: Vec<f64>,
    keys_roundtrip: Vec<f64>,
}

/// Decodes a key vector through a user-defined space and re-encodes the
/// result, as JSON. Shows the min-max mapping plus type snapping live.
#[wasm_bindgen]
pub fn decode_keys(request_json: &str) -> Result<String, wasm_bindgen::JsError> {
    decode_keys_impl(request_json).map_err(|e| wasm_bindgen::JsError::new(&e))
}

fn decode_keys_impl(request_json: &str) -> Result<String, String> {
    let request: DecodeRequest =
        serde_json::from_str(request_json).map_err(|e| format!("bad request: {e}"))?;
    let dims = request
        .space
        .into_iter()
        .map(|d| {
            let build = match d.kind.as_str() {
                "int" | "integer" => DimensionSpec::integer(d.name, d.min, d.max),
                "float" | "real" => DimensionSpec::real(d.name, d.min, d.max),
                other => return Err(format!("kind must be int or float, got `{other}`")),
            };
            build.map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, String>>()?;
    let space = HyperSpace::new(dims).map_err(|e| e.to_string())?;
    let keys = KeyVector::new(request.keys).map_err(|e| e.to_string())?;
    let gamma: HyperVector = space.decode(&keys).map_err(|e| e.to_string())?;
    let roundtrip = space.encode(&gamma).map_err(|e| e.to_string())?;
    let response = DecodeResponse {
        values: gamma.values().to_vec(),
        keys_roundtrip: roundtrip.keys().to_vec(),
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}
