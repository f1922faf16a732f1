//! Nonparametric tests: Wilcoxon signed-rank and Friedman.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::AnalyticsError;

/// Values closer than this, relative to their magnitude, count as equal.
/// Scores transcribed with one decimal produce differences such as
/// `6.5 - 6.4` and `1.1 - 1.0` that are equal in decimal but not in floating point.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Largest sample for which the exact null distribution is used.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    NormalApprox,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: Method,
}

/// Positive and negative rank sums, reported alongside the test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRankSums {
    pub w_plus: f64,
    pub w_minus: f64,
    pub ties: bool,
}

pub fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// 1-based mid-ranks of `values` plus the size of every tie group.
pub fn ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut groups = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && nearly_equal(values[order[end - 1]], values[order[end]]) {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = mid;
        }
        groups.push(end - start);
        start = end;
    }
    (out, groups)
}

fn tie_term(groups: &[usize]) -> f64 {
    groups.iter().map(|&t| (t * t * t - t) as f64).sum()
}

/// Signed-rank sums of `x - y` with zero differences dropped.
pub fn signed_rank_sums(x: &[f64], y: &[f64]) -> Result<(SignedRankSums, usize, Vec<usize>), AnalyticsError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(AnalyticsError::Input(format!(
            "paired samples need equal non-zero lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !nearly_equal(**a, **b))
        .map(|(a, b)| a - b)
        .collect();
    if d.is_empty() {
        return Err(AnalyticsError::Undefined("every paired difference is zero".into()));
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (r, groups) = ranks(&abs);
    let mut w_plus = 0.0;
    let mut w_minus = 0.0;
    for (di, ri) in d.iter().zip(&r) {
        if *di > 0.0 {
            w_plus += ri;
        } else {
            w_minus += ri;
        }
    }
    let ties = groups.iter().any(|&g| g > 1);
    Ok((SignedRankSums { w_plus, w_minus, ties }, d.len(), groups))
}

/// Number of sign assignments of ranks `1..=n` giving each positive rank sum.
pub fn signed_rank_counts(n: usize) -> Vec<f64> {
    let max = n * (n + 1) / 2;
    let mut c = vec![0.0; max + 1];
    c[0] = 1.0;
    for k in 1..=n {
        for w in (k..=max).rev() {
            c[w] += c[w - k];
        }
    }
    c
}

/// Two-sided Wilcoxon signed-rank test of `x` against `y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<StatResult, AnalyticsError> {
    let (sums, n, groups) = signed_rank_sums(x, y)?;
    let t = sums.w_plus.min(sums.w_minus);
    if !sums.ties && n <= EXACT_MAX_N {
        let counts = signed_rank_counts(n);
        // without ties every rank is an integer, so T is too
        let t_int = t.round() as usize;
        let below: f64 = counts[..=t_int].iter().sum();
        let p = (2.0 * below / 2f64.powi(n as i32)).min(1.0);
        return Ok(StatResult {
            statistic: t,
            p_value: p,
            n,
            method: Method::Exact,
        });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&groups) / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = (t - mean) / var.sqrt();
        (2.0 * Normal::standard().cdf(z)).min(1.0)
    };
    Ok(StatResult {
        statistic: t,
        p_value: p,
        n,
        method: Method::NormalApprox,
    })
}

/// Friedman test over `groups[treatment][block]`.
pub fn friedman_test(groups: &[Vec<f64>]) -> Result<StatResult, AnalyticsError> {
    let k = groups.len();
    if k < 2 {
        return Err(AnalyticsError::Input("Friedman test needs at least two treatments".into()));
    }
    let n = groups[0].len();
    if groups.iter().any(|g| g.len() != n) {
        return Err(AnalyticsError::Input("Friedman groups have different lengths".into()));
    }
    if n < 2 {
        return Err(AnalyticsError::Input("Friedman test needs at least two blocks".into()));
    }
    let mut rank_sums = vec![0.0; k];
    let mut ties = 0.0;
    for b in 0..n {
        let block: Vec<f64> = groups.iter().map(|g| g[b]).collect();
        let (r, g) = ranks(&block);
        for (s, v) in rank_sums.iter_mut().zip(r) {
            *s += v;
        }
        ties += tie_term(&g);
    }
    let (nf, kf) = (n as f64, k as f64);
    let correction = 1.0 - ties / (nf * (kf * kf * kf - kf));
    let sum_sq: f64 = rank_sums.iter().map(|r| r * r).sum();
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0);
    let (fr, p) = if correction <= 0.0 {
        (0.0, 1.0)
    } else {
        let fr = (raw / correction).max(0.0);
        let chi = ChiSquared::new(kf - 1.0).expect("positive degrees of freedom");
        (fr, chi.sf(fr).clamp(0.0, 1.0))
    };
    Ok(StatResult {
        statistic: fr,
        p_value: p,
        n,
        method: Method::ChiSquare,
    })
}
