//! Kruskal-Wallis H statistic and the chi-squared upper tail.
//!
//! The statistic is evaluated in its variance-ratio form
//!
//! ```text
//! H = (n - 1) * sum_j n_j (mean_j - mean)^2 / sum_j sum_i (r_ij - mean)^2
//! ```
//!
//! directly on the supplied values. Ties need no separate correction in this
//! form; applying it to pooled mid-ranks gives the tie-corrected textbook
//! statistic.

use std::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("fewer than two non-empty groups")]
    TooFewGroups,
    #[error("all values are identical, total variance is zero")]
    DegenerateVariance,
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

/// Rank values partitioned into groups (one group per language).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupedRanks {
    groups: Vec<Vec<f64>>,
}

impl GroupedRanks {
    pub fn new(groups: Vec<Vec<f64>>) -> Self {
        Self { groups }
    }

    pub fn groups(&self) -> &[Vec<f64>] {
        &self.groups
    }

    /// Total number of values.
    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of non-empty groups.
    pub fn non_empty(&self) -> usize {
        self.groups.iter().filter(|g| !g.is_empty()).count()
    }

    /// Replaces every value by its mid-rank in the pooled sample: tied values
    /// share the average of the ranks they span.
    pub fn to_midranks(&self) -> GroupedRanks {
        let mut pooled: Vec<(f64, usize, usize)> = Vec::with_capacity(self.len());
        for (gi, group) in self.groups.iter().enumerate() {
            for (vi, v) in group.iter().enumerate() {
                pooled.push((*v, gi, vi));
            }
        }
        pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

        let mut out: Vec<Vec<f64>> = self.groups.iter().map(|g| vec![0.0; g.len()]).collect();
        let mut start = 0;
        while start < pooled.len() {
            let mut end = start + 1;
            while end < pooled.len() && pooled[end].0 == pooled[start].0 {
                end += 1;
            }
            // ranks start+1 ..= end
            let mid = (start + 1 + end) as f64 / 2.0;
            for &(_, gi, vi) in &pooled[start..end] {
                out[gi][vi] = mid;
            }
            start = end;
        }
        GroupedRanks::new(out)
    }
}

impl From<Vec<Vec<f64>>> for GroupedRanks {
    fn from(groups: Vec<Vec<f64>>) -> Self {
        Self::new(groups)
    }
}

/// Which values the statistic is computed on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Rerank {
    /// The rank positions as given, including tied cutoff values.
    #[default]
    Literal,
    /// Pooled mid-ranks, i.e. the textbook Kruskal-Wallis procedure.
    Midranks,
}

/// How degrees of freedom are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DfRule {
    /// Non-empty groups in the sample, minus one.
    #[default]
    NonEmptyGroups,
    /// A fixed number of collection languages, minus one.
    Collection(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KwOptions {
    pub rerank: Rerank,
    pub df: DfRule,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KwResult {
    /// `None` when the test is degenerate and `p` was defined as 1.
    pub h: Option<f64>,
    pub df: u32,
    pub p: f64,
}

/// The H statistic over the non-empty groups of `g`.
pub fn kw_statistic(g: &GroupedRanks) -> Result<f64, StatsError> {
    let groups: Vec<&[f64]> = g
        .groups
        .iter()
        .filter(|v| !v.is_empty())
        .map(Vec::as_slice)
        .collect();
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if groups.iter().flat_map(|v| v.iter()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let n: usize = groups.iter().map(|v| v.len()).sum();
    let grand = groups.iter().flat_map(|v| v.iter()).sum::<f64>() / n as f64;

    let mut between = 0.0;
    let mut total = 0.0;
    for values in &groups {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        between += values.len() as f64 * (mean - grand).powi(2);
        total += values.iter().map(|r| (r - grand).powi(2)).sum::<f64>();
    }
    if total == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((n - 1) as f64 * between / total)
}

/// Kruskal-Wallis p-value. Total over its input: fewer than two non-empty
/// groups, or zero variance, give `p = 1`.
pub fn kw_pvalue(g: &GroupedRanks, opts: KwOptions) -> Result<KwResult, StatsError> {
    let m = g.non_empty();
    let df = match opts.df {
        DfRule::NonEmptyGroups => m.saturating_sub(1),
        DfRule::Collection(langs) => langs.saturating_sub(1),
    } as u32;
    let degenerate = KwResult { h: None, df, p: 1.0 };
    if m < 2 || df < 1 {
        return Ok(degenerate);
    }

    let h = match opts.rerank {
        Rerank::Literal => kw_statistic(g),
        Rerank::Midranks => kw_statistic(&g.to_midranks()),
    };
    let h = match h {
        Ok(h) => h,
        Err(StatsError::DegenerateVariance) => return Ok(degenerate),
        Err(e) => return Err(e),
    };
    let p = chi2_sf(h, df)?;
    Ok(KwResult { h: Some(h), df, p })
}

/// Survival function of the chi-squared distribution, `Q(df/2, x/2)`.
pub fn chi2_sf(x: f64, df: u32) -> Result<f64, StatsError> {
    if df < 1 {
        return Err(StatsError::InvalidArgument(format!("degrees of freedom must be >= 1, got {df}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(StatsError::InvalidArgument(format!("x must be >= 0, got {x}")));
    }
    gamma_q(df as f64 / 2.0, x / 2.0)
}

const MAX_ITER: usize = 1000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Regularized upper incomplete gamma function `Q(a, x)` for `a > 0`, `x >= 0`.
///
/// Series for `P` when `x < a + 1`, Lentz continued fraction for `Q` otherwise.
pub fn gamma_q(a: f64, x: f64) -> Result<f64, StatsError> {
    if a <= 0.0 || !a.is_finite() {
        return Err(StatsError::InvalidArgument(format!("shape must be > 0, got {a}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(StatsError::InvalidArgument(format!("x must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    let q = if x < a + 1.0 {
        1.0 - series_p(a, x)? * log_prefactor.exp()
    } else {
        continued_fraction_q(a, x)? * log_prefactor.exp()
    };
    Ok(q.clamp(0.0, 1.0))
}

// sum_{n>=0} x^n / (a (a+1) ... (a+n))
fn series_p(a: f64, x: f64) -> Result<f64, StatsError> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            return Ok(sum);
        }
    }
    Err(StatsError::NoConvergence("incomplete gamma series"))
}

// 1 / (x + 1 - a - 1(1-a) / (x + 3 - a - 2(2-a) / (x + 5 - a - ...)))
fn continued_fraction_q(a: f64, x: f64) -> Result<f64, StatsError> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(StatsError::NoConvergence("incomplete gamma continued fraction"))
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `a > 0`.
pub fn ln_gamma(a: f64) -> f64 {
    if a < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let a = a - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (a + i as f64);
    }
    let t = a + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (a + 0.5) * t.ln() - t + sum.ln()
}
