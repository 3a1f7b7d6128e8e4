//! Multi-run summaries, two-sided rank-sum comparison, and best-so-far curve
//! aggregation. Pure functions throughout.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::objective::RunHistory;

/// Final-best statistics over repeated runs of one strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub strategy: String,
    /// Final best score of each run.
    pub bests: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator); absent for a single run.
    pub std: Option<f64>,
}

/// Extracts each run's final best score and computes mean / sample std.
pub fn summarize(histories: &[RunHistory]) -> Result<RunSummary> {
    if histories.is_empty() {
        return Err(Error::EmptyInput { what: "histories" });
    }
    let mut bests = Vec::with_capacity(histories.len());
    let mut strategy = String::new();
    for history in histories {
        let best = history
            .final_best()
            .ok_or(Error::EmptyInput { what: "run history" })?;
        bests.push(best.value());
        if strategy.is_empty() {
            strategy = history.trials()[0].strategy.clone();
        }
    }
    let n = bests.len() as f64;
    let mean = bests.iter().sum::<f64>() / n;
    let std = if bests.len() > 1 {
        let var = bests.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(var.sqrt())
    } else {
        None
    };
    Ok(RunSummary {
        strategy,
        bests,
        mean,
        std,
    })
}

/// Outcome of a two-sided rank-sum comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankSumTest {
    pub p_value: f64,
    pub reject: bool,
    /// Whether the exact null distribution was enumerated (small tie-free
    /// samples) rather than normally approximated.
    pub exact: bool,
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test.
///
/// Uses exact enumeration of the rank-sum null distribution when the pooled
/// sample has at most 12 tie-free observations; otherwise midranks with the
/// tie-corrected normal approximation and a continuity correction of 0.5.
/// Fully degenerate input (every pooled value identical) yields p = 1.
pub fn rank_sum_test(a: &[f64], b: &[f64], alpha: f64) -> Result<RankSumTest> {
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "rank-sum test needs at least 3 observations per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    for &v in a.iter().chain(b) {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "rank-sum observation",
                value: v,
            });
        }
    }

    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite values"));

    let total = pooled.len();
    let has_ties = pooled.windows(2).any(|w| w[0].0 == w[1].0);

    let p_value = if !has_ties && total <= 12 {
        exact_p_value(&pooled, a.len())
    } else {
        approximate_p_value(&pooled, a.len(), b.len())
    };
    Ok(RankSumTest {
        p_value,
        reject: p_value < alpha,
        exact: !has_ties && total <= 12,
    })
}

/// Exact two-sided p: probability mass of rank sums at least as far from the
/// null mean `n(N+1)/2` as the observed one, on both sides.
fn exact_p_value(pooled: &[(f64, bool)], n_a: usize) -> f64 {
    let total = pooled.len();
    let observed: usize = pooled
        .iter()
        .enumerate()
        .filter(|(_, (_, from_a))| *from_a)
        .map(|(i, _)| i + 1)
        .sum();

    let distribution = rank_sum_counts(total, n_a);
    let all: f64 = distribution.iter().sum::<u64>() as f64;
    let mirror = n_a * (total + 1) - observed;
    let (lo, hi) = (observed.min(mirror), observed.max(mirror));
    let tail: u64 = distribution
        .iter()
        .enumerate()
        .filter(|(w, _)| *w <= lo || *w >= hi)
        .map(|(_, &c)| c)
        .sum();
    (tail as f64 / all).min(1.0)
}

/// `counts[w]` = number of ways to choose `k` ranks from `{1..=total}` whose
/// sum is `w`.
fn rank_sum_counts(total: usize, k: usize) -> Vec<u64> {
    let max_sum = (total - k + 1..=total).sum::<usize>();
    let mut counts = vec![vec![0u64; max_sum + 1]; k + 1];
    counts[0][0] = 1;
    for rank in 1..=total {
        for chosen in (1..=k.min(rank)).rev() {
            for sum in (rank..=max_sum).rev() {
                counts[chosen][sum] += counts[chosen - 1][sum - rank];
            }
        }
    }
    counts.pop().expect("k+1 rows were allocated")
}

/// Midrank normal approximation with tie-corrected variance and a 0.5
/// continuity correction toward the mean. Returns 1 when the variance
/// degenerates (all pooled values identical).
fn approximate_p_value(pooled: &[(f64, bool)], n_a: usize, n_b: usize) -> f64 {
    let total = pooled.len();
    let mut midranks = vec![0.0; total];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < total {
        let mut end = start + 1;
        while end < total && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        let tied = (end - start) as f64;
        let rank = (start + end + 1) as f64 / 2.0;
        for slot in midranks.iter_mut().take(end).skip(start) {
            *slot = rank;
        }
        tie_term += tied.powi(3) - tied;
        start = end;
    }

    let rank_sum_a: f64 = pooled
        .iter()
        .zip(&midranks)
        .filter(|((_, from_a), _)| *from_a)
        .map(|(_, &r)| r)
        .sum();

    let (n_a, n_b, total) = (n_a as f64, n_b as f64, total as f64);
    let u = rank_sum_a - n_a * (n_a + 1.0) / 2.0;
    let mean = n_a * n_b / 2.0;
    let variance =
        n_a * n_b / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if variance <= 0.0 {
        return 1.0;
    }
    // continuity correction shrinks toward the mean without crossing it
    let centered = u - mean;
    let corrected = centered.signum() * (centered.abs() - 0.5).max(0.0);
    let z = corrected / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Pointwise mean of the best-so-far curves of several equal-length runs.
pub fn mean_curve(histories: &[RunHistory]) -> Result<Vec<f64>> {
    if histories.is_empty() {
        return Err(Error::EmptyInput { what: "histories" });
    }
    let len = histories[0].len();
    for history in histories {
        if history.len() != len {
            return Err(Error::LengthMismatch {
                what: "run lengths",
                left: len,
                right: history.len(),
            });
        }
    }
    let mut curve = vec![0.0; len];
    for history in histories {
        for (slot, score) in curve.iter_mut().zip(history.best_so_far()) {
            *slot += score.value();
        }
    }
    for slot in &mut curve {
        *slot /= histories.len() as f64;
    }
    Ok(curve)
}
