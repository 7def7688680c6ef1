//! One-tailed Wilcoxon tests and descriptive summaries.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Tail under test: whether the second sample tends to be larger or smaller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Rank sum of the second sample, or the positive-rank sum when paired.
    pub statistic: f64,
    pub z: f64,
    pub p_value: f64,
    /// No variance under the null (for example all values equal); `p_value` is 0.5.
    pub degenerate: bool,
}

/// Average ranks (1-based) of `values`, plus the tie term `sum(t^3 - t)`.
fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

fn finite(sample: &[f64], name: &str) -> Result<()> {
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} contains non-finite values")));
    }
    Ok(())
}

/// Upper-tail normal probability with a 0.5 continuity correction.
fn normal_tail(excess: f64, variance: f64, statistic: f64) -> TestResult {
    if variance <= 0.0 {
        return TestResult {
            statistic,
            z: 0.0,
            p_value: 0.5,
            degenerate: true,
        };
    }
    let z = (excess - 0.5) / variance.sqrt();
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    TestResult {
        statistic,
        z,
        p_value: std.sf(z),
        degenerate: false,
    }
}

/// Rank-sum test for independent samples using the normal approximation
/// with tie and continuity corrections.
pub fn wilcoxon_rank_sum(sample_a: &[f64], sample_b: &[f64], direction: Direction) -> Result<TestResult> {
    if sample_a.len() < 3 || sample_b.len() < 3 {
        return Err(Error::invalid("each sample needs at least 3 observations"));
    }
    finite(sample_a, "sample_a")?;
    finite(sample_b, "sample_b")?;
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let n = na + nb;
    let pooled: Vec<f64> = sample_a.iter().chain(sample_b).copied().collect();
    let (ranks, ties) = average_ranks(&pooled);
    let w: f64 = ranks[sample_a.len()..].iter().sum();
    let mean = nb * (n + 1.0) / 2.0;
    let variance = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let excess = match direction {
        Direction::Greater => w - mean,
        Direction::Less => mean - w,
    };
    Ok(normal_tail(excess, variance, w))
}

/// Signed-rank test on paired differences `b - a`; zero differences are dropped.
pub fn wilcoxon_signed_rank(sample_a: &[f64], sample_b: &[f64], direction: Direction) -> Result<TestResult> {
    if sample_a.len() != sample_b.len() {
        return Err(Error::invalid("paired samples must have equal length"));
    }
    if sample_a.len() < 3 {
        return Err(Error::invalid("paired samples need at least 3 observations"));
    }
    finite(sample_a, "sample_a")?;
    finite(sample_b, "sample_b")?;
    let diffs: Vec<f64> = sample_a
        .iter()
        .zip(sample_b)
        .map(|(a, b)| b - a)
        .filter(|d| *d != 0.0)
        .collect();
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&magnitudes);
    let w: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let n = diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    let excess = match direction {
        Direction::Greater => w - mean,
        Direction::Less => mean - w,
    };
    Ok(normal_tail(excess, variance, w))
}

/// Type-7 (linear interpolation) quantile of ascending data.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    let (first, last) = (sorted.first()?, sorted.last()?);
    if sorted.len() == 1 {
        return Some(*first);
    }
    if q <= 0.0 {
        return Some(*first);
    }
    if q >= 1.0 {
        return Some(*last);
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when n = 1.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    /// Beyond 1.5 IQR but within 3 IQR of the quartiles.
    pub mild_outliers: Vec<f64>,
    /// Beyond 3 IQR of the quartiles.
    pub extreme_outliers: Vec<f64>,
}

impl SampleSummary {
    pub fn iqr(&self) -> f64 {
        self.upper_quartile - self.lower_quartile
    }
}

pub fn summarize(sample: &[f64]) -> Result<SampleSummary> {
    if sample.is_empty() {
        return Err(Error::invalid("cannot summarise an empty sample"));
    }
    finite(sample, "sample")?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);

    // Welford's update
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &x) in sample.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = sample.len();
    let sd = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };

    let q = |p| quantile(&sorted, p).expect("non-empty");
    let (lq, uq) = (q(0.25), q(0.75));
    let iqr = uq - lq;
    let mut mild_outliers = Vec::new();
    let mut extreme_outliers = Vec::new();
    for &x in &sorted {
        let gap = if x < lq { lq - x } else { x - uq };
        if gap > 3.0 * iqr {
            extreme_outliers.push(x);
        } else if gap > 1.5 * iqr {
            mild_outliers.push(x);
        }
    }
    Ok(SampleSummary {
        n,
        mean,
        median: q(0.5),
        sd,
        min: sorted[0],
        max: sorted[n - 1],
        lower_quartile: lq,
        upper_quartile: uq,
        mild_outliers,
        extreme_outliers,
    })
}
