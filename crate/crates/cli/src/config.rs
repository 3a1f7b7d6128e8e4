//! Experiment configuration: a flat key=value file with one `[section]` per
//! strategy, plus a whitespace-separated space definition file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use hbrkga::benchmarks::Benchmark;
use hbrkga::hyperspace::{DimensionKind, DimensionSpec, HyperSpace};

/// Configuration or input-file problem; maps to exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(message: impl Into<String>) -> Result<T> {
    Err(ConfigError(message.into()))
}

fn line_err<T>(path: &Path, line: usize, message: impl fmt::Display) -> Result<T> {
    err(format!("{}:{line}: {message}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimingMode {
    /// Emit wall_time_s as 0 so outputs are byte-reproducible (default).
    Zero,
    /// Emit measured wall times; reruns then differ in that column.
    Real,
}

#[derive(Clone, Debug)]
pub enum ObjectiveSpec {
    Synthetic(Benchmark),
    Blobs {
        classes: usize,
        per_class: usize,
        spread: f64,
        seed: u64,
        /// Also write the generated dataset to `dataset.csv` in the output
        /// directory, for external reproduction.
        dump: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum StrategyKind {
    Grid,
    Random,
    Brkga,
    Hbrkga,
}

impl StrategyKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::Random => "random",
            Self::Brkga => "brkga",
            Self::Hbrkga => "hbrkga",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        match name {
            "grid" => Some(Self::Grid),
            "random" => Some(Self::Random),
            "brkga" => Some(Self::Brkga),
            "hbrkga" => Some(Self::Hbrkga),
            _ => None,
        }
    }
}

/// Population settings for the evolutionary strategies.
#[derive(Clone, Debug)]
pub struct EvolutionSettings {
    pub population_size: usize,
    pub elite_size: usize,
    pub mutant_size: usize,
    pub elite_bias: f64,
    pub walk_steps: usize,
    pub perturbation_ratio: f64,
}

impl EvolutionSettings {
    /// The hybrid defaults: population 6, elite 2, mutant 1, bias 0.7,
    /// 3 walk steps at ratio 0.15.
    pub fn hybrid_defaults() -> Self {
        Self {
            population_size: 6,
            elite_size: 2,
            mutant_size: 1,
            elite_bias: 0.7,
            walk_steps: 3,
            perturbation_ratio: 0.15,
        }
    }

    /// Walk-disabled arm: the larger population (24/8/4) compensates for the
    /// missing refinement evaluations at equal budget.
    pub fn walkless_defaults() -> Self {
        Self {
            population_size: 24,
            elite_size: 8,
            mutant_size: 4,
            elite_bias: 0.7,
            walk_steps: 0,
            perturbation_ratio: 0.15,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub evolution: EvolutionSettings,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSpec,
    pub space: HyperSpace,
    pub budget: usize,
    pub runs: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// 0 means all available cores.
    pub workers: usize,
    pub timing: TimingMode,
    pub strategies: Vec<StrategyConfig>,
}

struct Assignment {
    line: usize,
    value: String,
}

/// Loads and fully validates an experiment config file. The space file path
/// is resolved relative to the config file.
pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;

    let mut globals: BTreeMap<String, Assignment> = BTreeMap::new();
    let mut sections: Vec<(StrategyKind, usize, BTreeMap<String, Assignment>)> = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            match StrategyKind::from_name(name) {
                Some(kind) => {
                    if sections.iter().any(|(k, _, _)| *k == kind) {
                        return line_err(path, line_no, format!("duplicate section [{name}]"));
                    }
                    sections.push((kind, line_no, BTreeMap::new()));
                }
                None => {
                    return line_err(
                        path,
                        line_no,
                        format!("unknown strategy [{name}]; expected grid, random, brkga or hbrkga"),
                    )
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return line_err(path, line_no, format!("expected key = value, got `{line}`"));
        };
        let assignment = Assignment {
            line: line_no,
            value: value.trim().to_string(),
        };
        let key = key.trim().to_string();
        let target = sections
            .last_mut()
            .map_or(&mut globals, |(_, _, keys)| keys);
        if target.insert(key.clone(), assignment).is_some() {
            return line_err(path, line_no, format!("duplicate key `{key}`"));
        }
    }

    let globals = Parsed {
        path,
        keys: globals,
    };

    let objective_name = globals.require_str("objective")?;
    let objective = match objective_name.as_str() {
        "blobs" => ObjectiveSpec::Blobs {
            classes: globals.get_usize("blob_classes", 3)?,
            per_class: globals.get_usize("blob_per_class", 200)?,
            spread: globals.get_f64("blob_spread", 0.9)?,
            seed: globals.get_u64("blob_seed", 7)?,
            dump: globals.get_bool("dump_dataset", false)?,
        },
        name => match Benchmark::from_name(name) {
            Some(benchmark) => ObjectiveSpec::Synthetic(benchmark),
            None => {
                return err(format!(
                    "{}: unknown objective `{name}`; expected sphere, rastrigin, rosenbrock or blobs",
                    path.display()
                ))
            }
        },
    };

    let space_file = globals.require_str("space")?;
    let space_path = path.parent().unwrap_or(Path::new(".")).join(&space_file);
    let space = load_space(&space_path)?;

    let budget = globals.get_usize("budget", 240)?;
    let runs = globals.get_usize("runs", 10)?;
    if budget == 0 || runs == 0 {
        return err(format!(
            "{}: budget and runs must both be at least 1",
            path.display()
        ));
    }
    let seed = globals.get_u64("seed", 0)?;
    let output_dir = PathBuf::from(globals.get_str("output_dir", "results")?);
    let workers = globals.get_usize("workers", 0)?;
    let timing = match globals.get_str("timing", "zero")?.as_str() {
        "zero" => TimingMode::Zero,
        "real" => TimingMode::Real,
        other => {
            return err(format!(
                "{}: timing must be `zero` or `real`, got `{other}`",
                path.display()
            ))
        }
    };
    globals.reject_unknown(&[
        "objective",
        "space",
        "budget",
        "runs",
        "seed",
        "output_dir",
        "workers",
        "timing",
        "blob_classes",
        "blob_per_class",
        "blob_spread",
        "blob_seed",
        "dump_dataset",
    ])?;

    if sections.is_empty() {
        return err(format!(
            "{}: no strategy sections; add at least one of [grid] [random] [brkga] [hbrkga]",
            path.display()
        ));
    }

    let mut strategies = Vec::new();
    for (kind, section_line, keys) in sections {
        let section = Parsed { path, keys };
        let defaults = match kind {
            StrategyKind::Hbrkga => EvolutionSettings::hybrid_defaults(),
            _ => EvolutionSettings::walkless_defaults(),
        };
        let evolution = match kind {
            StrategyKind::Grid | StrategyKind::Random => {
                section.reject_unknown(&[])?;
                defaults
            }
            StrategyKind::Brkga | StrategyKind::Hbrkga => {
                let walk_steps = if kind == StrategyKind::Brkga {
                    if section.keys.contains_key("walk_steps") {
                        return line_err(
                            path,
                            section_line,
                            "[brkga] is the walk-disabled arm; walk_steps is fixed at 0 (use [hbrkga] to configure walks)",
                        );
                    }
                    0
                } else {
                    section.get_usize("walk_steps", defaults.walk_steps)?
                };
                let settings = EvolutionSettings {
                    population_size: section
                        .get_usize("population_size", defaults.population_size)?,
                    elite_size: section.get_usize("elite_size", defaults.elite_size)?,
                    mutant_size: section.get_usize("mutant_size", defaults.mutant_size)?,
                    elite_bias: section.get_f64("elite_bias", defaults.elite_bias)?,
                    walk_steps,
                    perturbation_ratio: section
                        .get_f64("perturbation_ratio", defaults.perturbation_ratio)?,
                };
                section.reject_unknown(&[
                    "population_size",
                    "elite_size",
                    "mutant_size",
                    "elite_bias",
                    "walk_steps",
                    "perturbation_ratio",
                ])?;
                settings
            }
        };
        strategies.push(StrategyConfig { kind, evolution });
    }

    let config = ExperimentConfig {
        objective,
        space,
        budget,
        runs,
        seed,
        output_dir,
        workers,
        timing,
        strategies,
    };
    validate_semantics(&config, path)?;
    Ok(config)
}

fn validate_semantics(config: &ExperimentConfig, path: &Path) -> Result<()> {
    if let ObjectiveSpec::Blobs { classes, per_class, spread, .. } = &config.objective {
        if *classes == 0 || *per_class == 0 {
            return err(format!(
                "{}: blob_classes and blob_per_class must be at least 1",
                path.display()
            ));
        }
        if !spread.is_finite() || *spread < 0.0 {
            return err(format!("{}: blob_spread must be non-negative", path.display()));
        }
        if config.space.len() != 5 {
            return err(format!(
                "{}: the blobs objective needs a 5-dimension tuning space, got {}",
                path.display(),
                config.space.len()
            ));
        }
    }
    Ok(())
}

struct Parsed<'a> {
    path: &'a Path,
    keys: BTreeMap<String, Assignment>,
}

impl Parsed<'_> {
    fn require_str(&self, key: &str) -> Result<String> {
        match self.keys.get(key) {
            Some(a) => Ok(a.value.clone()),
            None => err(format!("{}: missing required key `{key}`", self.path.display())),
        }
    }

    fn get_str(&self, key: &str, default: &str) -> Result<String> {
        Ok(self
            .keys
            .get(key)
            .map_or_else(|| default.to_string(), |a| a.value.clone()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, kind: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.keys.get(key) {
            None => Ok(None),
            Some(a) => match a.value.parse::<T>() {
                Ok(v) => Ok(Some(v)),
                Err(e) => line_err(self.path, a.line, format!("`{key}` must be {kind}: {e}")),
            },
        }
    }

    fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parse::<usize>(key, "a non-negative integer")?.unwrap_or(default))
    }

    fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parse::<u64>(key, "a non-negative integer")?.unwrap_or(default))
    }

    fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parse::<f64>(key, "a real number")?.unwrap_or(default))
    }

    fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.parse::<bool>(key, "true or false")?.unwrap_or(default))
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        for (key, assignment) in &self.keys {
            if !known.contains(&key.as_str()) {
                return line_err(self.path, assignment.line, format!("unknown key `{key}`"));
            }
        }
        Ok(())
    }
}

/// Space definition file: one dimension per line,
/// `name kind min max [comma-separated grid values]`, `#` comments.
pub fn load_space(path: &Path) -> Result<HyperSpace> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut dims = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 && fields.len() != 5 {
            return line_err(
                path,
                line_no,
                format!(
                    "expected `name kind min max [grid values]`, got {} fields",
                    fields.len()
                ),
            );
        }
        let kind = match fields[1] {
            "int" => DimensionKind::Integer,
            "float" => DimensionKind::Real,
            other => {
                return line_err(path, line_no, format!("kind must be int or float, got `{other}`"))
            }
        };
        let min: f64 = fields[2]
            .parse()
            .map_err(|e| ConfigError(format!("{}:{line_no}: bad min: {e}", path.display())))?;
        let max: f64 = fields[3]
            .parse()
            .map_err(|e| ConfigError(format!("{}:{line_no}: bad max: {e}", path.display())))?;
        let mut dim = DimensionSpec::new(fields[0], kind, min, max)
            .map_err(|e| ConfigError(format!("{}:{line_no}: {e}", path.display())))?;
        if fields.len() == 5 {
            let values = fields[4]
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| {
                        ConfigError(format!("{}:{line_no}: bad grid value `{v}`: {e}", path.display()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            dim = dim
                .with_grid(values)
                .map_err(|e| ConfigError(format!("{}:{line_no}: {e}", path.display())))?;
        }
        dims.push(dim);
    }
    HyperSpace::new(dims).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}
