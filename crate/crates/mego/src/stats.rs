//! Correlation coefficients, the rank-sum test, and benchmark aggregation.
//!
//! These back two very different consumers: the routing policy (Pearson and
//! Spearman on predicted vs. observed scores) and the evaluation protocol
//! (Wilcoxon rank-sum verdicts, acceleration ratios, W-D-L counts, and
//! convergence-curve reduction). Everything here is a pure function.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Values paired with their fractional (average-tie) ranks.
#[derive(Debug, Clone)]
pub struct RankedSample {
    pub values: Vec<f64>,
    pub ranks: Vec<f64>,
}

impl RankedSample {
    pub fn new(values: &[f64]) -> Self {
        RankedSample {
            values: values.to_vec(),
            ranks: ranks(values),
        }
    }
}

/// Fractional 1-based ranks with ties averaged.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share the average rank
        let avg = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            out[idx] = avg;
        }
        i = j;
    }
    out
}

fn check_paired(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(what, format!("{} values", a.len()), format!("{} values", b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(format!("{what} needs at least 2 points")));
    }
    Ok(())
}

/// Product-moment correlation; `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_paired(a, b, "pearson")?;
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Ok(None);
    }
    Ok(Some(cov / (var_a * var_b).sqrt()))
}

/// Pearson correlation of the average-tie fractional ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_paired(a, b, "spearman")?;
    pearson(&ranks(a), &ranks(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Win,
    Draw,
    Loss,
}

/// Result of a two-sided rank-sum comparison of `a` against `b`.
///
/// `statistic` is the rank sum of `a` in the pooled ranking. The verdict is
/// from `a`'s point of view in maximization orientation: `Win` means `a` is
/// significantly better.
#[derive(Debug, Clone, Copy)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Two-sided Wilcoxon rank-sum test at significance `alpha`.
///
/// Exact permutation p-value when `|a| + |b| <= 12` (kept small so the
/// enumeration stays under a second); otherwise the normal approximation
/// with tie and continuity corrections. Draw when `p >= alpha` or the
/// sample medians are equal.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], alpha: f64) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("wilcoxon_rank_sum needs non-empty samples".into()));
    }
    let n = a.len();
    let m = b.len();
    let total = n + m;
    let mut pooled: Vec<f64> = Vec::with_capacity(total);
    pooled.extend_from_slice(a);
    pooled.extend_from_slice(b);
    let pooled_ranks = ranks(&pooled);
    let w_obs: f64 = pooled_ranks[..n].iter().sum();

    let p_value = if total <= 12 {
        exact_two_sided_p(&pooled_ranks, n, w_obs)
    } else {
        normal_approx_p(&pooled, &pooled_ranks, n, m, w_obs)
    };

    let med_a = median(a);
    let med_b = median(b);
    let verdict = if p_value >= alpha || med_a == med_b {
        Verdict::Draw
    } else if med_a > med_b {
        Verdict::Win
    } else {
        Verdict::Loss
    };
    Ok(TestOutcome {
        statistic: w_obs,
        p_value,
        verdict,
    })
}

/// Doubled one-tail probability over all C(n+m, n) rank assignments.
fn exact_two_sided_p(pooled_ranks: &[f64], n: usize, w_obs: f64) -> f64 {
    let total = pooled_ranks.len();
    let mut count_le = 0u64;
    let mut count_ge = 0u64;
    let mut count_all = 0u64;
    // subsets as bitmasks; total <= 12 so at most 4096 masks
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let mut w = 0.0;
        for (i, &r) in pooled_ranks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                w += r;
            }
        }
        count_all += 1;
        // tolerance for fractional tie ranks
        if w <= w_obs + 1e-9 {
            count_le += 1;
        }
        if w >= w_obs - 1e-9 {
            count_ge += 1;
        }
    }
    let p_le = count_le as f64 / count_all as f64;
    let p_ge = count_ge as f64 / count_all as f64;
    (2.0 * p_le.min(p_ge)).min(1.0)
}

/// Normal approximation with tie correction and continuity correction.
fn normal_approx_p(pooled: &[f64], _pooled_ranks: &[f64], n: usize, m: usize, w_obs: f64) -> f64 {
    let total = (n + m) as f64;
    let mean = n as f64 * (total + 1.0) / 2.0;

    // tie counts
    let mut sorted = pooled.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = (n * m) as f64 / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let diff = w_obs - mean;
    let cc = 0.5 * diff.signum();
    let z = (diff - cc) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0)
}

/// Mean #FEs baselines need to reach `mego_quality`, divided by MEGO's mean
/// #FEs.
///
/// `baseline_curves` are best-so-far curves in maximization orientation,
/// one per trial, indexed from FE 1. A trial that never reaches the quality
/// contributes its full trace length (a censoring rule that makes the
/// reported ratio a lower bound).
pub fn acceleration_ratio(baseline_curves: &[Vec<f64>], mego_quality: f64, mego_mean_fes: f64) -> Result<f64> {
    if baseline_curves.is_empty() || baseline_curves.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("acceleration_ratio needs non-empty traces".into()));
    }
    if mego_mean_fes <= 0.0 {
        return Err(Error::InvalidArgument("mego_mean_fes must be positive".into()));
    }
    let mean_baseline = baseline_curves
        .iter()
        .map(|curve| {
            curve
                .iter()
                .position(|&q| q >= mego_quality)
                .map_or(curve.len(), |idx| idx + 1) as f64
        })
        .sum::<f64>()
        / baseline_curves.len() as f64;
    Ok(mean_baseline / mego_mean_fes)
}

/// Win/draw/loss counts of a list of outcomes.
pub fn wdl(outcomes: &[TestOutcome]) -> (usize, usize, usize) {
    let mut counts = (0, 0, 0);
    for o in outcomes {
        match o.verdict {
            Verdict::Win => counts.0 += 1,
            Verdict::Draw => counts.1 += 1,
            Verdict::Loss => counts.2 += 1,
        }
    }
    counts
}

/// Best-so-far curve of one trace of raw values in maximization
/// orientation.
pub fn best_so_far(trace: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    trace
        .iter()
        .map(|&y| {
            best = best.max(y);
            best
        })
        .collect()
}

/// Pointwise mean over trials of the best-so-far value at each FE index.
///
/// Shorter traces are extended with their final best-so-far value so trials
/// with different budgets can still be averaged.
pub fn mean_best_so_far(traces: &[Vec<f64>]) -> Vec<f64> {
    let max_len = traces.iter().map(Vec::len).max().unwrap_or(0);
    let curves: Vec<Vec<f64>> = traces.iter().map(|t| best_so_far(t)).collect();
    (0..max_len)
        .map(|i| {
            curves
                .iter()
                .filter(|c| !c.is_empty())
                .map(|c| c[i.min(c.len() - 1)])
                .sum::<f64>()
                / curves.iter().filter(|c| !c.is_empty()).count() as f64
        })
        .collect()
}
