//! Space-time Brown–Resnick fields with unit Fréchet margins.
//!
//! Sampling follows the extremal functions scheme: subgrid points are visited
//! time-major, and for each one the Poisson points `ζ` above the current value
//! are generated in decreasing order. Every candidate extremal function
//! `ζ·exp(W(x) − γ(x − x_k))` is kept only if it does not exceed the process at
//! any earlier subgrid point. Two approximations apply: only every
//! `subgrid_stride`-th site is treated exactly, and each extremal function is
//! evaluated on the `±temporal_truncation` time window around its anchor.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::field::{FieldSeries, SpatialGrid};

/// Separable power variogram `γ(h, t) = ‖(a₁h₁, a₂h₂)‖^θs + |t|^θt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariogramSpec {
    pub anisotropy: (f64, f64),
    pub spatial_exponent: f64,
    pub temporal_exponent: f64,
}

impl Default for VariogramSpec {
    fn default() -> Self {
        Self {
            anisotropy: (2.6, 2.4),
            spatial_exponent: 1.9,
            temporal_exponent: 1.1,
        }
    }
}

impl VariogramSpec {
    pub fn validate(&self) -> Result<()> {
        let (a1, a2) = self.anisotropy;
        if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
            return Err(Error::invalid("anisotropy factors must be positive"));
        }
        for e in [self.spatial_exponent, self.temporal_exponent] {
            if !(e > 0.0 && e <= 2.0) {
                return Err(Error::invalid(format!("variogram exponent {e} outside (0, 2]")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn spatial(&self, h: (f64, f64)) -> f64 {
        let x = self.anisotropy.0 * h.0;
        let y = self.anisotropy.1 * h.1;
        x.hypot(y).powf(self.spatial_exponent)
    }

    #[inline]
    pub fn temporal(&self, lag: f64) -> f64 {
        lag.abs().powf(self.temporal_exponent)
    }

    #[inline]
    pub fn eval(&self, h: (f64, f64), lag: f64) -> f64 {
        self.spatial(h) + self.temporal(lag)
    }

    /// Pairwise extremal coefficient `2Φ(√(γ/2))` of the Brown–Resnick process.
    pub fn extremal_coefficient(&self, h: (f64, f64), lag: f64) -> f64 {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        2.0 * normal.cdf((self.eval(h, lag) / 2.0).sqrt())
    }
}

/// Point of the space-time domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// Sampler for a centred Gaussian field `W` pinned to 0 at an anchor, with
/// `Cov(W(a), W(b)) = γ(a − x₀) + γ(b − x₀) − γ(a − b)`.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    n_points: usize,
    free: Vec<usize>,
    factor: DMatrix<f64>,
}

impl IncrementSampler {
    pub fn new<P: PartialEq>(points: &[P], anchor: &P, gamma: impl Fn(&P, &P) -> f64) -> Result<Self> {
        let free: Vec<usize> = (0..points.len()).filter(|&i| points[i] != *anchor).collect();
        let m = free.len();
        let to_anchor: Vec<f64> = free.iter().map(|&i| gamma(&points[i], anchor)).collect();
        let cov = DMatrix::from_fn(m, m, |i, j| {
            to_anchor[i] + to_anchor[j] - gamma(&points[free[i]], &points[free[j]])
        });
        let factor = if m == 0 {
            DMatrix::zeros(0, 0)
        } else {
            cholesky_with_jitter(cov)?
        };
        Ok(Self {
            n_points: points.len(),
            free,
            factor,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Fill `out` (length `n_points`) with one draw; anchor entries are exactly 0.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_points);
        out.fill(0.0);
        let m = self.free.len();
        let z: DVector<f64> = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
        for i in 0..m {
            let row = self.factor.row(i);
            let mut acc = 0.0;
            for j in 0..=i {
                acc += row[j] * z[j];
            }
            out[self.free[i]] = acc;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.n_points];
        self.sample_into(rng, &mut out);
        out
    }
}

/// Lower Cholesky factor after adding `1e-10·(1 + max diag)` to the diagonal,
/// escalating the jitter tenfold up to `1e-6·(1 + max diag)`.
pub fn cholesky_with_jitter(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let max_diag = cov.diagonal().iter().copied().fold(0.0, f64::max);
    let mut jitter = 1e-10 * (1.0 + max_diag);
    loop {
        let mut m = cov.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            return Ok(ch.l());
        }
        if jitter >= 1e-6 * (1.0 + max_diag) * (1.0 - 1e-9) {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        jitter *= 10.0;
    }
}

/// One draw of the increment field on arbitrary space-time points.
pub fn gaussian_increment_field<R: Rng + ?Sized>(
    spec: &VariogramSpec,
    anchor: SpaceTimePoint,
    points: &[SpaceTimePoint],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let sampler = IncrementSampler::new(points, &anchor, |a, b| {
        spec.eval((a.x - b.x, a.y - b.y), a.t - b.t)
    })?;
    Ok(sampler.sample(rng))
}

/// Increment field on `grid × {first_lag, …, last_lag}` anchored at `(anchor_site, 0)`.
///
/// Because the variogram is a sum of a spatial and a temporal part, the field
/// splits into independent spatial and temporal increment fields, each pinned
/// at the anchor, and `W(s, t) = W_s(s) + W_t(t)` has exactly the required
/// covariance. Only the two small factors are stored.
#[derive(Debug, Clone)]
pub struct SeparableIncrementSampler {
    spatial: IncrementSampler,
    temporal: IncrementSampler,
    spatial_drift: Vec<f64>,
    temporal_drift: Vec<f64>,
    first_lag: i64,
}

impl SeparableIncrementSampler {
    pub fn new(
        spec: &VariogramSpec,
        grid: &SpatialGrid,
        anchor_site: usize,
        first_lag: i64,
        last_lag: i64,
    ) -> Result<Self> {
        spec.validate()?;
        if anchor_site >= grid.site_count() {
            return Err(Error::invalid("anchor site outside grid"));
        }
        if first_lag > 0 || last_lag < 0 {
            return Err(Error::invalid("time window must contain the anchor time 0"));
        }
        let sites: Vec<usize> = (0..grid.site_count()).collect();
        let sgamma = |a: &usize, b: &usize| {
            let (pa, pb) = (grid.coord(*a), grid.coord(*b));
            spec.spatial((pa.0 - pb.0, pa.1 - pb.1))
        };
        let spatial = IncrementSampler::new(&sites, &anchor_site, sgamma)?;
        let lags: Vec<i64> = (first_lag..=last_lag).collect();
        let temporal = IncrementSampler::new(&lags, &0, |a, b| spec.temporal((a - b) as f64))?;
        let spatial_drift = sites.iter().map(|s| sgamma(s, &anchor_site)).collect();
        let temporal_drift = lags.iter().map(|&l| spec.temporal(l as f64)).collect();
        Ok(Self {
            spatial,
            temporal,
            spatial_drift,
            temporal_drift,
            first_lag,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.spatial.n_points()
    }

    pub fn n_lags(&self) -> usize {
        self.temporal.n_points()
    }

    pub fn first_lag(&self) -> i64 {
        self.first_lag
    }

    /// Spectral function `V(s, t) = exp(W(s, t) − γ(s − s*, t))` as its two factors:
    /// `V(s, t) = spatial[s] · temporal[t − first_lag]`.
    pub fn spectral_factors<R: Rng + ?Sized>(&self, rng: &mut R, spatial: &mut [f64], temporal: &mut [f64]) {
        self.spatial.sample_into(rng, spatial);
        for (v, d) in spatial.iter_mut().zip(&self.spatial_drift) {
            *v = (*v - d).exp();
        }
        self.temporal.sample_into(rng, temporal);
        for (v, d) in temporal.iter_mut().zip(&self.temporal_drift) {
            *v = (*v - d).exp();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Arc<SpatialGrid>,
    pub n_times: usize,
    pub subgrid_stride: usize,
    pub temporal_truncation: usize,
    pub rng_seed: u64,
}

impl SimConfig {
    pub fn new(grid: Arc<SpatialGrid>, n_times: usize, rng_seed: u64) -> Self {
        Self {
            grid,
            n_times,
            subgrid_stride: 2,
            temporal_truncation: 18,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_times == 0 {
            return Err(Error::invalid("n_times must be positive"));
        }
        if self.subgrid_stride == 0 {
            return Err(Error::invalid("subgrid stride must be >= 1"));
        }
        if self.temporal_truncation == 0 {
            return Err(Error::invalid("temporal truncation must be >= 1"));
        }
        Ok(())
    }

    /// Sites treated exactly: every `subgrid_stride`-th site index.
    pub fn subgrid_sites(&self) -> Vec<usize> {
        (0..self.grid.site_count()).step_by(self.subgrid_stride).collect()
    }
}

/// Simulate one field series; deterministic in `config.rng_seed`.
pub fn simulate(spec: &VariogramSpec, config: &SimConfig) -> Result<FieldSeries<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    simulate_with_rng(spec, config, &mut rng)
}

/// Independent replicates with per-replicate ChaCha streams of the master seed.
pub fn simulate_replicates(spec: &VariogramSpec, config: &SimConfig, count: usize) -> Result<Vec<FieldSeries<f64>>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(i as u64 + 1);
            simulate_with_rng(spec, config, &mut rng)
        })
        .collect()
}

fn simulate_with_rng<R: Rng>(spec: &VariogramSpec, config: &SimConfig, rng: &mut R) -> Result<FieldSeries<f64>> {
    spec.validate()?;
    config.validate()?;
    let n_sites = config.grid.site_count();
    let n_times = config.n_times;
    let reach = config.temporal_truncation.min(n_times.saturating_sub(1)) as i64;
    let subgrid = config.subgrid_sites();
    let samplers: Vec<SeparableIncrementSampler> = subgrid
        .iter()
        .map(|&k| SeparableIncrementSampler::new(spec, &config.grid, k, -reach, reach))
        .collect::<Result<_>>()?;

    let mut z = vec![0.0f64; n_times * n_sites];
    let mut a = vec![0.0; n_sites];
    let mut b = vec![0.0; 2 * reach as usize + 1];

    for t in 0..n_times {
        let lo = t.saturating_sub(reach as usize);
        let hi = (t + reach as usize).min(n_times - 1);
        for (kk, &k) in subgrid.iter().enumerate() {
            let sampler = &samplers[kk];
            let mut inv_zeta: f64 = rng.sample(Exp1);
            let mut zeta = 1.0 / inv_zeta;
            while zeta > z[t * n_sites + k] {
                sampler.spectral_factors(rng, &mut a, &mut b);
                let at = |tt: usize| b[(tt as i64 - t as i64 + reach) as usize];
                let mut accept = true;
                'check: for tt in lo..=t {
                    let row = &z[tt * n_sites..(tt + 1) * n_sites];
                    let scale = zeta * at(tt);
                    let earlier = if tt < t { subgrid.len() } else { kk };
                    for &j in &subgrid[..earlier] {
                        if scale * a[j] >= row[j] {
                            accept = false;
                            break 'check;
                        }
                    }
                }
                if accept {
                    for tt in lo..=hi {
                        let scale = zeta * at(tt);
                        for (zv, av) in z[tt * n_sites..(tt + 1) * n_sites].iter_mut().zip(&a) {
                            let v = scale * av;
                            if v > *zv {
                                *zv = v;
                            }
                        }
                    }
                }
                inv_zeta += rng.sample::<f64, _>(Exp1);
                zeta = 1.0 / inv_zeta;
            }
        }
    }
    FieldSeries::new(Arc::clone(&config.grid), n_times, z)
}

/// Extremal coefficient from the F-madogram of two unit Fréchet series.
pub fn madogram_extremal_coefficient(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |z: f64| (-1.0 / z).exp();
    let nu = a.iter().zip(b).map(|(&x, &y)| (cdf(x) - cdf(y)).abs()).sum::<f64>() / (2.0 * a.len() as f64);
    (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu)
}
