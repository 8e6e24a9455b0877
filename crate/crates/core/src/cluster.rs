//! Exceedance clusters of a risk series and the ratio estimators built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ordinal_pattern, permutations, FieldSeries, OrdinalPattern};
use crate::risk::{apply_risk_with_scratch, RiskFunctional};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_CLUSTER_SIZE: usize = 12;
pub const MAX_PATTERN_LENGTH: usize = 5;

/// Maximal run `start..start+length` of values above the threshold, with an
/// in-range non-exceedance on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterIndex {
    pub start: usize,
    pub length: usize,
}

impl ClusterIndex {
    /// Index of the left delimiter.
    pub fn first(&self) -> usize {
        self.start - 1
    }

    /// Index of the right delimiter.
    pub fn last(&self) -> usize {
        self.start + self.length
    }
}

/// `r` applied to every time slice of the series.
pub fn risk_series<T: Scalar>(series: &FieldSeries<T>, r: RiskFunctional) -> Vec<f64> {
    let n = series.site_count();
    series
        .values()
        .par_chunks_exact(n)
        .map_init(Vec::new, |scratch, field| apply_risk_with_scratch(r, field, scratch))
        .collect()
}

/// Clusters of `rv` above `u`; runs touching either end of the series are dropped.
pub fn extract_clusters(rv: &[f64], u: f64) -> Vec<ClusterIndex> {
    let mut out = Vec::new();
    scan_range(rv, u, 1, rv.len(), &mut out);
    out
}

/// Emit clusters whose start lies in `lo..hi`. Runs may extend past `hi`.
fn scan_range(rv: &[f64], u: f64, lo: usize, hi: usize, out: &mut Vec<ClusterIndex>) {
    let n = rv.len();
    let mut k = lo.max(1);
    while k < hi {
        if rv[k] > u && rv[k - 1] <= u {
            let mut end = k + 1;
            while end < n && rv[end] > u {
                end += 1;
            }
            if end < n {
                out.push(ClusterIndex {
                    start: k,
                    length: end - k,
                });
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
}

/// [`extract_clusters`] evaluated in parallel over chunks of `chunk_len` start positions.
/// The result does not depend on `chunk_len`.
pub fn extract_clusters_chunked(rv: &[f64], u: f64, chunk_len: usize) -> Vec<ClusterIndex> {
    let chunk_len = chunk_len.max(1);
    let n_chunks = rv.len().div_ceil(chunk_len);
    let parts: Vec<Vec<ClusterIndex>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut part = Vec::new();
            scan_range(rv, u, c * chunk_len, ((c + 1) * chunk_len).min(rv.len()), &mut part);
            part
        })
        .collect();
    parts.concat()
}

/// `Σ 1{A} / Σ 1{A0}`.
pub fn ratio_estimator(indicator_a: &[bool], indicator_a0: &[bool]) -> Result<f64> {
    if indicator_a.len() != indicator_a0.len() {
        return Err(Error::invalid("indicator vectors differ in length"));
    }
    let den = indicator_a0.iter().filter(|&&b| b).count();
    if den == 0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(indicator_a.iter().filter(|&&b| b).count() as f64 / den as f64)
}

/// One cluster's contribution to a distribution: the delimited window and its bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledWindow {
    pub first: usize,
    pub last: usize,
    pub label: usize,
}

/// Estimated probabilities over cluster sizes or ordinal patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternDistribution {
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
    pub counts: Vec<u64>,
    pub ci_lo: Option<Vec<f64>>,
    pub ci_hi: Option<Vec<f64>>,
    pub denominator_count: u64,
    /// Clusters dropped because the statistic was undefined inside the window.
    pub skipped_undefined: u64,
    #[serde(skip)]
    pub windows: Vec<LabeledWindow>,
}

impl PatternDistribution {
    fn from_windows(labels: Vec<String>, windows: Vec<LabeledWindow>, skipped: u64) -> Self {
        let mut counts = vec![0u64; labels.len()];
        for w in &windows {
            counts[w.label] += 1;
        }
        let den = windows.len() as u64;
        let probs = counts.iter().map(|&c| c as f64 / den as f64).collect();
        Self {
            labels,
            probs,
            counts,
            ci_lo: None,
            ci_hi: None,
            denominator_count: den,
            skipped_undefined: skipped,
            windows,
        }
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probs[i])
    }

    pub fn tie_count(&self) -> u64 {
        self.labels
            .iter()
            .position(|l| l == "ties")
            .map_or(0, |i| self.counts[i])
    }
}

pub fn size_labels(max_size: usize) -> Vec<String> {
    let mut labels: Vec<String> = (1..=max_size).map(|l| l.to_string()).collect();
    labels.push(format!(">={}", max_size + 1));
    labels
}

/// Distribution of cluster sizes over `1..=max_size` plus an overflow bucket.
pub fn cluster_size_distribution(rv: &[f64], u: f64, max_size: usize) -> Result<PatternDistribution> {
    cluster_size_distribution_from(&extract_clusters(rv, u), max_size)
}

pub fn cluster_size_distribution_from(clusters: &[ClusterIndex], max_size: usize) -> Result<PatternDistribution> {
    if max_size == 0 {
        return Err(Error::invalid("max cluster size must be >= 1"));
    }
    if clusters.is_empty() {
        return Err(Error::NoClusters);
    }
    let windows = clusters
        .iter()
        .map(|c| LabeledWindow {
            first: c.first(),
            last: c.last(),
            label: c.length.min(max_size + 1) - 1,
        })
        .collect();
    Ok(PatternDistribution::from_windows(size_labels(max_size), windows, 0))
}

/// Which clusters enter a pattern distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternScope {
    /// Clusters of size at least ℓ, pattern of their first ℓ times.
    #[default]
    AtLeast,
    /// Clusters of size exactly ℓ.
    Exactly,
}

pub fn pattern_labels(len: usize) -> Vec<String> {
    let mut labels: Vec<String> = permutations(len).iter().map(|p| p.to_string()).collect();
    labels.push(OrdinalPattern::tie().to_string());
    labels
}

/// Ordinal-pattern distribution of `rv_stat` over the first `len` times of the
/// clusters of `cluster_rv` above `u`.
///
/// Non-finite entries of `rv_stat` mark an undefined statistic; clusters that
/// hit one are skipped and counted in `skipped_undefined`.
pub fn pattern_distribution(
    rv_stat: &[f64],
    cluster_rv: &[f64],
    u: f64,
    len: usize,
    scope: PatternScope,
) -> Result<PatternDistribution> {
    if rv_stat.len() != cluster_rv.len() {
        return Err(Error::invalid("statistic and risk series differ in length"));
    }
    pattern_distribution_from(rv_stat, &extract_clusters(cluster_rv, u), len, scope)
}

pub fn pattern_distribution_from(
    rv_stat: &[f64],
    clusters: &[ClusterIndex],
    len: usize,
    scope: PatternScope,
) -> Result<PatternDistribution> {
    if !(2..=MAX_PATTERN_LENGTH).contains(&len) {
        return Err(Error::invalid(format!("pattern length {len} outside 2..={MAX_PATTERN_LENGTH}")));
    }
    let n_perm = (1..=len).product::<usize>();
    let mut windows = Vec::new();
    let mut skipped = 0;
    for c in clusters {
        let qualifies = match scope {
            PatternScope::AtLeast => c.length >= len,
            PatternScope::Exactly => c.length == len,
        };
        if !qualifies {
            continue;
        }
        let values = &rv_stat[c.start..c.start + len];
        if values.iter().any(|v| !v.is_finite()) {
            skipped += 1;
            continue;
        }
        let pattern = ordinal_pattern(values)?;
        windows.push(LabeledWindow {
            first: c.first(),
            last: c.last(),
            label: pattern.lex_index().unwrap_or(n_perm),
        });
    }
    if windows.is_empty() {
        return Err(Error::NoQualifyingClusters(len));
    }
    Ok(PatternDistribution::from_windows(pattern_labels(len), windows, skipped))
}
