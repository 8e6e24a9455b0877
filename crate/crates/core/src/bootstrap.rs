//! Multiplier block bootstrap for the ratio estimators.
//!
//! The series is cut into disjoint blocks of `block_length` time points (a
//! partial trailing block is dropped). Every labelled cluster window that lies
//! entirely inside one block is counted for that block. A replicate reweights
//! the block counts by `1 + ξ_j` with i.i.d. mean-zero, unit-variance `ξ_j`:
//!
//! ```text
//! R* = Σ_j (1 + ξ_j) N_j(label) / Σ_j (1 + ξ_j) D_j
//! ```
//!
//! Replicates whose denominator is not positive are discarded and counted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{LabeledWindow, PatternDistribution};
use crate::error::{Error, Result};
use crate::field::empirical_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierLaw {
    #[default]
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub block_length: usize,
    pub replicates: usize,
    pub multiplier_law: MultiplierLaw,
    pub ci_level: f64,
    pub rng_seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            block_length: 1000,
            replicates: 1000,
            multiplier_law: MultiplierLaw::Gaussian,
            ci_level: 0.95,
            rng_seed: 0,
        }
    }
}

impl BootstrapConfig {
    /// `max_window` is the largest pattern/cluster window length analysed.
    pub fn validate(&self, max_window: usize) -> Result<()> {
        if self.block_length < max_window + 2 {
            return Err(Error::invalid(format!(
                "block length {} shorter than window + 2 = {}",
                self.block_length,
                max_window + 2
            )));
        }
        if self.replicates < 100 {
            return Err(Error::invalid(format!("need at least 100 replicates, got {}", self.replicates)));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::invalid("ci_level must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `replicates × n_blocks` multipliers, row-major, drawn from `rng_seed`.
    pub fn draw_multipliers(&self, n_blocks: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let n = self.replicates * n_blocks;
        match self.multiplier_law {
            MultiplierLaw::Gaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
            MultiplierLaw::Rademacher => (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect(),
        }
    }
}

/// Per-block numerator counts (per label) and denominator counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCounts {
    pub numerators: Vec<Vec<u64>>,
    pub denominators: Vec<u64>,
}

impl BlockCounts {
    pub fn n_blocks(&self) -> usize {
        self.denominators.len()
    }

    pub fn n_labels(&self) -> usize {
        self.numerators.first().map_or(0, Vec::len)
    }

    pub fn total_denominator(&self) -> u64 {
        self.denominators.iter().sum()
    }
}

/// Assign windows to disjoint blocks of `block_length` time points.
pub fn block_counts(
    windows: &[LabeledWindow],
    n_labels: usize,
    n_times: usize,
    block_length: usize,
) -> Result<BlockCounts> {
    if block_length == 0 {
        return Err(Error::invalid("block length must be positive"));
    }
    if n_times < 2 * block_length {
        return Err(Error::SeriesTooShort {
            n_times,
            required: 2 * block_length,
        });
    }
    let n_blocks = n_times / block_length;
    let mut numerators = vec![vec![0u64; n_labels]; n_blocks];
    let mut denominators = vec![0u64; n_blocks];
    for w in windows {
        let j = w.first / block_length;
        if j == w.last / block_length && j < n_blocks {
            numerators[j][w.label] += 1;
            denominators[j] += 1;
        }
    }
    Ok(BlockCounts {
        numerators,
        denominators,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// `Σ_j N_j / Σ_j D_j` per label.
    pub point: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub n_replicates: usize,
    pub n_degenerate: usize,
    pub warnings: Vec<String>,
}

pub fn bootstrap_ci(bc: &BlockCounts, config: &BootstrapConfig) -> Result<BootstrapResult> {
    let multipliers = config.draw_multipliers(bc.n_blocks());
    bootstrap_ci_with_multipliers(bc, &multipliers, config.ci_level)
}

/// Percentile intervals from an explicit `replicates × n_blocks` multiplier matrix.
pub fn bootstrap_ci_with_multipliers(bc: &BlockCounts, multipliers: &[f64], ci_level: f64) -> Result<BootstrapResult> {
    let b = bc.n_blocks();
    if b == 0 || multipliers.len() % b != 0 {
        return Err(Error::invalid("multiplier matrix does not match block count"));
    }
    let total_den = bc.total_denominator();
    if total_den == 0 {
        return Err(Error::ZeroDenominator);
    }
    let n_labels = bc.n_labels();
    let point = (0..n_labels)
        .map(|l| bc.numerators.iter().map(|n| n[l]).sum::<u64>() as f64 / total_den as f64)
        .collect();

    let replicates: Vec<Option<Vec<f64>>> = multipliers
        .par_chunks_exact(b)
        .map(|xi| {
            let den: f64 = xi.iter().zip(&bc.denominators).map(|(x, &d)| (1.0 + x) * d as f64).sum();
            if den <= 0.0 {
                return None;
            }
            Some(
                (0..n_labels)
                    .map(|l| {
                        xi.iter()
                            .zip(&bc.numerators)
                            .map(|(x, n)| (1.0 + x) * n[l] as f64)
                            .sum::<f64>()
                            / den
                    })
                    .collect(),
            )
        })
        .collect();

    let n_replicates = replicates.len();
    let surviving: Vec<&Vec<f64>> = replicates.iter().flatten().collect();
    let n_degenerate = n_replicates - surviving.len();
    if surviving.is_empty() {
        return Err(Error::AllReplicatesDegenerate(n_replicates));
    }
    let alpha = (1.0 - ci_level) / 2.0;
    let mut ci_lo = Vec::with_capacity(n_labels);
    let mut ci_hi = Vec::with_capacity(n_labels);
    for l in 0..n_labels {
        let values: Vec<f64> = surviving.iter().map(|r| r[l]).collect();
        ci_lo.push(empirical_quantile(&values, alpha)?);
        ci_hi.push(empirical_quantile(&values, 1.0 - alpha)?);
    }
    let mut warnings = Vec::new();
    if n_degenerate as f64 > 0.05 * n_replicates as f64 {
        warnings.push(format!(
            "{n_degenerate} of {n_replicates} bootstrap replicates had a nonpositive denominator"
        ));
    }
    Ok(BootstrapResult {
        point,
        ci_lo,
        ci_hi,
        n_replicates,
        n_degenerate,
        warnings,
    })
}

/// Bootstrap a distribution in place, filling `ci_lo`/`ci_hi`.
pub fn attach_bootstrap(
    dist: &mut PatternDistribution,
    n_times: usize,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    let bc = block_counts(&dist.windows, dist.labels.len(), n_times, config.block_length)?;
    let res = bootstrap_ci(&bc, config)?;
    dist.ci_lo = Some(res.ci_lo.clone());
    dist.ci_hi = Some(res.ci_hi.clone());
    Ok(res)
}
