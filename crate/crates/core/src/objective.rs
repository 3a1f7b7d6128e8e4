//! Evaluation contract, score sense, classification metrics, and trial
//! logging.
//!
//! Scores are minimized everywhere in this crate. Metrics that are maximized
//! (macro-F1 and friends) enter through [`wrap_maximize`], which negates them;
//! a single comparison direction removes an entire class of sign bugs.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperspace::HyperVector;

/// Finite objective value under the fixed minimize sense.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                what: "score",
                value,
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Adapts a to-maximize metric into the minimize sense by negation.
/// `argmin` over wrapped scores equals `argmax` over the raw metrics.
pub fn wrap_maximize(metric_value: f64) -> Result<Score> {
    Score::new(-metric_value)
}

/// Black-box evaluation contract. Implementations must be total over
/// conforming hyperparameter vectors, deterministic given their evaluation
/// seed, and tolerant of concurrent invocation.
pub trait Objective: Sync {
    fn evaluate(&self, gamma: &HyperVector) -> Result<Score>;
    fn dims(&self) -> usize;
    fn descriptor(&self) -> &str;
}

impl<O: Objective + ?Sized> Objective for &O {
    fn evaluate(&self, gamma: &HyperVector) -> Result<Score> {
        (**self).evaluate(gamma)
    }

    fn dims(&self) -> usize {
        (**self).dims()
    }

    fn descriptor(&self) -> &str {
        (**self).descriptor()
    }
}

/// Counts evaluations of the wrapped objective; optionally errors once a hard
/// budget would be exceeded. Used to assert budget accounting.
pub struct CountingObjective<'a> {
    inner: &'a dyn Objective,
    count: AtomicUsize,
    limit: Option<usize>,
}

impl<'a> CountingObjective<'a> {
    pub fn new(inner: &'a dyn Objective) -> Self {
        Self {
            inner,
            count: AtomicUsize::new(0),
            limit: None,
        }
    }

    pub fn with_limit(inner: &'a dyn Objective, limit: usize) -> Self {
        Self {
            inner,
            count: AtomicUsize::new(0),
            limit: Some(limit),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }
}

impl Objective for CountingObjective<'_> {
    fn evaluate(&self, gamma: &HyperVector) -> Result<Score> {
        let n = self.count.fetch_add(1, Ordering::SeqCst) + 1;
        if let Some(limit) = self.limit {
            if n > limit {
                return Err(Error::Objective(format!(
                    "evaluation budget of {limit} exceeded"
                )));
            }
        }
        self.inner.evaluate(gamma)
    }

    fn dims(&self) -> usize {
        self.inner.dims()
    }

    fn descriptor(&self) -> &str {
        self.inner.descriptor()
    }
}

/// Evaluates and reports the wall time of the call in seconds. On wasm there
/// is no monotonic clock; the duration is reported as zero.
pub(crate) fn timed_evaluate(
    objective: &dyn Objective,
    gamma: &HyperVector,
) -> Result<(Score, f64)> {
    #[cfg(not(target_arch = "wasm32"))]
    {
        let start = std::time::Instant::now();
        let score = objective.evaluate(gamma)?;
        Ok((score, start.elapsed().as_secs_f64()))
    }
    #[cfg(target_arch = "wasm32")]
    {
        Ok((objective.evaluate(gamma)?, 0.0))
    }
}

/// Per-class true-positive / false-positive / false-negative counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

/// Confusion counts over a fixed set of classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    classes: Vec<ClassCounts>,
}

impl ConfusionCounts {
    pub fn new(n_classes: usize) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::EmptyInput {
                what: "confusion counts",
            });
        }
        Ok(Self {
            classes: vec![ClassCounts::default(); n_classes],
        })
    }

    /// Builds counts from aligned truth/prediction label slices.
    pub fn from_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::LengthMismatch {
                what: "truth vs predictions",
                left: truth.len(),
                right: predicted.len(),
            });
        }
        let mut counts = Self::new(n_classes)?;
        for (&t, &p) in truth.iter().zip(predicted) {
            counts.record(t, p)?;
        }
        Ok(counts)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let len = self.classes.len();
        let check = |index: usize| {
            if index >= len {
                Err(Error::IndexOutOfRange {
                    what: "class",
                    index,
                    len,
                })
            } else {
                Ok(())
            }
        };
        check(truth)?;
        check(predicted)?;
        if truth == predicted {
            self.classes[truth].true_positives += 1;
        } else {
            self.classes[predicted].false_positives += 1;
            self.classes[truth].false_negatives += 1;
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, c: usize) -> Result<&ClassCounts> {
        self.classes.get(c).ok_or(Error::IndexOutOfRange {
            what: "class",
            index: c,
            len: self.classes.len(),
        })
    }

    pub fn class_mut(&mut self, c: usize) -> Result<&mut ClassCounts> {
        let len = self.classes.len();
        self.classes.get_mut(c).ok_or(Error::IndexOutOfRange {
            what: "class",
            index: c,
            len,
        })
    }
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// `tp / (tp + fp)` for class `c`; 0 when the denominator is 0.
pub fn precision(counts: &ConfusionCounts, c: usize) -> Result<f64> {
    let class = counts.class(c)?;
    Ok(ratio(
        class.true_positives,
        class.true_positives + class.false_positives,
    ))
}

/// `tp / (tp + fn)` for class `c`; 0 when the denominator is 0.
pub fn recall(counts: &ConfusionCounts, c: usize) -> Result<f64> {
    let class = counts.class(c)?;
    Ok(ratio(
        class.true_positives,
        class.true_positives + class.false_negatives,
    ))
}

/// Unweighted mean over classes of `2*p*r / (p + r)`, with a per-class F1 of
/// 0 when `p + r = 0`.
pub fn macro_f1(counts: &ConfusionCounts) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..counts.n_classes() {
        let p = precision(counts, c)?;
        let r = recall(counts, c)?;
        if p + r > 0.0 {
            total += 2.0 * p * r / (p + r);
        }
    }
    Ok(total / counts.n_classes() as f64)
}

/// One objective evaluation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub strategy: String,
    pub trial_index: usize,
    pub gamma: HyperVector,
    pub score: Score,
    /// Seconds spent in the objective call; 0 when timing is unavailable.
    pub wall_time: f64,
}

/// Ordered evaluation log with its running-minimum curve.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunHistory {
    trials: Vec<TrialRecord>,
    best_so_far: Vec<Score>,
}

impl RunHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record. `trial_index` must equal the current length; the
    /// best-so-far curve is extended with the running minimum.
    pub fn record_trial(&mut self, record: TrialRecord) -> Result<()> {
        if record.trial_index != self.trials.len() {
            return Err(Error::OutOfOrderTrial {
                expected: self.trials.len(),
                got: record.trial_index,
            });
        }
        let best = match self.best_so_far.last() {
            Some(&prev) if prev.value() <= record.score.value() => prev,
            _ => record.score,
        };
        self.best_so_far.push(best);
        self.trials.push(record);
        Ok(())
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn best_so_far(&self) -> &[Score] {
        &self.best_so_far
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn final_best(&self) -> Option<Score> {
        self.best_so_far.last().copied()
    }

    /// First trial achieving the final best score (strict-< tracking).
    pub fn best_trial(&self) -> Option<&TrialRecord> {
        let best = self.final_best()?;
        self.trials.iter().find(|t| t.score == best)
    }

    /// CSV rendering: `strategy,trial_index,dim_0..dim_{n-1},score,wall_time_s,best_so_far`.
    pub fn to_csv(&self) -> String {
        let dims = self.trials.first().map_or(0, |t| t.gamma.len());
        let mut out = String::from("strategy,trial_index");
        for d in 0..dims {
            out.push_str(&format!(",dim_{d}"));
        }
        out.push_str(",score,wall_time_s,best_so_far\n");
        for (trial, best) in self.trials.iter().zip(&self.best_so_far) {
            out.push_str(&trial.strategy);
            out.push_str(&format!(",{}", trial.trial_index));
            for v in trial.gamma.values() {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(
                ",{},{},{}\n",
                trial.score.value(),
                trial.wall_time,
                best.value()
            ));
        }
        out
    }

    /// JSON-lines rendering, one object per trial.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (trial, best) in self.trials.iter().zip(&self.best_so_far) {
            let line = serde_json::json!({
                "strategy": trial.strategy,
                "trial_index": trial.trial_index,
                "gamma": trial.gamma.values(),
                "score": trial.score.value(),
                "wall_time_s": trial.wall_time,
                "best_so_far": best.value(),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(i: usize, score: f64) -> TrialRecord {
        TrialRecord {
            strategy: "test".into(),
            trial_index: i,
            gamma: HyperVector::new(vec![score]),
            score: Score::new(score).unwrap(),
            wall_time: 0.0,
        }
    }

    #[test]
    fn wrap_maximize_negates() {
        assert_eq!(wrap_maximize(1.0).unwrap().value(), -1.0);
        assert_eq!(wrap_maximize(0.0).unwrap().value(), 0.0);
        assert!(wrap_maximize(f64::NAN).is_err());
    }

    #[test]
    fn precision_recall_f1_hand_values() {
        let mut counts = ConfusionCounts::new(1).unwrap();
        counts.class_mut(0).unwrap().true_positives = 8;
        counts.class_mut(0).unwrap().false_positives = 2;
        counts.class_mut(0).unwrap().false_negatives = 1;
        assert!((precision(&counts, 0).unwrap() - 0.8).abs() < 1e-15);
        assert!((recall(&counts, 0).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        let p = 0.8;
        let r = 8.0 / 9.0;
        let expected = 2.0 * p * r / (p + r);
        assert!((macro_f1(&counts).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.8421).abs() < 1e-4);
    }

    #[test]
    fn zero_division_convention() {
        let counts = ConfusionCounts::new(2).unwrap();
        assert_eq!(precision(&counts, 0).unwrap(), 0.0);
        assert_eq!(recall(&counts, 1).unwrap(), 0.0);
        assert_eq!(macro_f1(&counts).unwrap(), 0.0);
    }

    #[test]
    fn perfect_predictions_give_unit_f1() {
        let counts = ConfusionCounts::from_predictions(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(macro_f1(&counts).unwrap(), 1.0);
        assert_eq!(precision(&counts, 1).unwrap(), 1.0);
        assert_eq!(recall(&counts, 1).unwrap(), 1.0);
    }

    #[test]
    fn macro_f1_rejects_empty() {
        assert!(ConfusionCounts::new(0).is_err());
    }

    #[test]
    fn best_so_far_is_running_minimum() {
        let mut history = RunHistory::new();
        for (i, s) in [0.5, 0.3, 0.4].into_iter().enumerate() {
            history.record_trial(record(i, s)).unwrap();
        }
        let curve: Vec<f64> = history.best_so_far().iter().map(|s| s.value()).collect();
        assert_eq!(curve, vec![0.5, 0.3, 0.3]);
        assert_eq!(history.final_best().unwrap().value(), 0.3);
        assert_eq!(history.best_trial().unwrap().trial_index, 1);
    }

    #[test]
    fn first_record_seeds_curve() {
        let mut history = RunHistory::new();
        history.record_trial(record(0, 1.25)).unwrap();
        assert_eq!(history.best_so_far(), &[Score::new(1.25).unwrap()]);
    }

    #[test]
    fn out_of_order_trial_rejected() {
        let mut history = RunHistory::new();
        history.record_trial(record(0, 1.0)).unwrap();
        assert!(matches!(
            history.record_trial(record(2, 1.0)),
            Err(Error::OutOfOrderTrial { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn csv_and_jsonl_carry_all_trials() {
        let mut history = RunHistory::new();
        history.record_trial(record(0, 0.5)).unwrap();
        history.record_trial(record(1, 0.25)).unwrap();
        let csv = history.to_csv();
        assert!(csv.starts_with("strategy,trial_index,dim_0,score,wall_time_s,best_so_far\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().ends_with(",0.25"));
        let jsonl = history.to_jsonl();
        assert_eq!(jsonl.lines().count(), 2);
        let parsed: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
        assert_eq!(parsed["trial_index"], 0);
    }

    proptest! {
        // Metrics stay in [0,1] for arbitrary non-negative counts.
        #[test]
        fn metrics_bounded(tp in 0u64..1000, fp in 0u64..1000, fneg in 0u64..1000) {
            let mut counts = ConfusionCounts::new(1).unwrap();
            *counts.class_mut(0).unwrap() = ClassCounts {
                true_positives: tp,
                false_positives: fp,
                false_negatives: fneg,
            };
            let p = precision(&counts, 0).unwrap();
            let r = recall(&counts, 0).unwrap();
            let f1 = macro_f1(&counts).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert!((0.0..=1.0).contains(&f1));
            // unit macro-F1 exactly when the class is perfectly predicted
            prop_assert_eq!(f1 == 1.0, tp > 0 && fp == 0 && fneg == 0);
        }

        // Appending random scores keeps the curve non-increasing and anchored
        // at the global minimum.
        #[test]
        fn curve_non_increasing(scores in proptest::collection::vec(-100.0f64..100.0, 1..240)) {
            let mut history = RunHistory::new();
            for (i, &s) in scores.iter().enumerate() {
                history.record_trial(record(i, s)).unwrap();
            }
            let curve = history.best_so_far();
            prop_assert!(curve.windows(2).all(|w| w[1].value() <= w[0].value()));
            let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(curve.last().unwrap().value(), min);
        }

        // argmin over wrapped scores lands on a raw-metric maximizer.
        #[test]
        fn wrap_preserves_argmax(metrics in proptest::collection::vec(-10.0f64..10.0, 1..50)) {
            let max = metrics.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let argmin = metrics
                .iter()
                .enumerate()
                .map(|(i, &m)| (i, wrap_maximize(m).unwrap()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            prop_assert_eq!(metrics[argmin], max);
        }
    }
}
