//! Per-site regression on a linear trend and a cyclic cubic spline season.
//!
//! The fitted mean at site `s` is
//! `μ_s(t) = β₀ + β₁ t + Σ_j β_{j+2} ψ_j(t)` with periodic uniform cubic
//! B-splines `ψ_j`. The splines sum to one, so the seasonal coefficients are
//! constrained to sum to zero to keep the intercept identifiable.
//!
//! Pooling stacks the rows of every site within the pooling radius with equal
//! weight. All sites share the design, so the stacked least-squares problem
//! has the same solution as regressing the neighbourhood-mean series on the
//! design; that is how it is computed.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSeries, SpatialGrid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionConfig {
    pub n_seasonal_basis: usize,
    pub period: f64,
    /// Kilometres; 0 disables pooling. Distances follow the grid's coordinate system.
    pub pooling_radius_km: f64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            n_seasonal_basis: 12,
            period: 365.25,
            pooling_radius_km: 30.0,
        }
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_seasonal_basis < 3 {
            return Err(Error::invalid("need at least 3 seasonal basis functions"));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::invalid("period must be positive"));
        }
        if !(self.pooling_radius_km.is_finite() && self.pooling_radius_km >= 0.0) {
            return Err(Error::invalid("pooling radius must be nonnegative"));
        }
        Ok(())
    }
}

/// Centred uniform cubic B-spline, supported on `(-2, 2)`.
fn cubic_bspline(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// The `K` periodic basis functions at time `t`; basis `j` peaks at `j·period/K`.
pub fn cyclic_spline_basis(config: &RegressionConfig, t: f64) -> Vec<f64> {
    let k = config.n_seasonal_basis;
    let mut out = vec![0.0; k];
    cyclic_spline_basis_into(k, config.period, t, &mut out);
    out
}

fn cyclic_spline_basis_into(k: usize, period: f64, t: f64, out: &mut [f64]) {
    let kf = k as f64;
    let x = t.rem_euclid(period) / period * kf;
    out.fill(0.0);
    // only knots within distance 2 contribute; sum over their periodic images
    let base = x.floor() as i64;
    for m in base - 1..=base + 2 {
        let j = m.rem_euclid(k as i64) as usize;
        out[j] += cubic_bspline(x - m as f64);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteCoefficients {
    pub intercept: f64,
    /// Per time step.
    pub slope: f64,
    /// Coefficients of `ψ_1..ψ_K`; they sum to zero.
    pub seasonal: Vec<f64>,
}

impl SiteCoefficients {
    pub fn seasonal_at(&self, config: &RegressionConfig, t: f64) -> f64 {
        cyclic_spline_basis(config, t).iter().zip(&self.seasonal).map(|(p, b)| p * b).sum()
    }

    pub fn fitted(&self, config: &RegressionConfig, t: f64) -> f64 {
        self.intercept + self.slope * t + self.seasonal_at(config, t)
    }
}

/// Shared design for a series of `n_times` steps, pre-factored by QR.
#[derive(Debug, Clone)]
pub struct Design {
    config: RegressionConfig,
    n_times: usize,
    /// Basis values, `n_times × K`.
    basis: Vec<f64>,
    /// `R⁻¹ Qᵀ` of the reduced design `[1, τ, ψ_1 − ψ_K, …, ψ_{K−1} − ψ_K]`.
    solve: DMatrix<f64>,
}

impl Design {
    pub fn new(config: &RegressionConfig, n_times: usize) -> Result<Self> {
        config.validate()?;
        let k = config.n_seasonal_basis;
        let p = k + 1;
        if n_times < p + 1 {
            return Err(Error::SeriesTooShort {
                n_times,
                required: p + 1,
            });
        }
        let mut basis = vec![0.0; n_times * k];
        for (t, row) in basis.chunks_exact_mut(k).enumerate() {
            cyclic_spline_basis_into(k, config.period, t as f64, row);
        }
        let half = (n_times - 1) as f64 / 2.0;
        let x = DMatrix::from_fn(n_times, p, |t, c| match c {
            0 => 1.0,
            1 => (t as f64 - half) / half,
            _ => basis[t * k + c - 2] - basis[t * k + k - 1],
        });
        let qr = x.qr();
        let r = qr.r();
        let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag) {
            return Err(Error::RankDeficient { site: 0 });
        }
        let solve = r
            .solve_upper_triangular(&qr.q().transpose())
            .ok_or(Error::RankDeficient { site: 0 })?;
        Ok(Self {
            config: config.clone(),
            n_times,
            basis,
            solve,
        })
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    fn coefficients(&self, y: &[f64]) -> SiteCoefficients {
        let k = self.config.n_seasonal_basis;
        let beta = &self.solve * nalgebra::DVector::from_column_slice(y);
        let half = (self.n_times - 1) as f64 / 2.0;
        let slope = beta[1] / half;
        let mut seasonal: Vec<f64> = beta.iter().skip(2).copied().collect();
        seasonal.push(-seasonal.iter().sum::<f64>());
        debug_assert_eq!(seasonal.len(), k);
        SiteCoefficients {
            intercept: beta[0] - beta[1],
            slope,
            seasonal,
        }
    }

    fn fitted(&self, c: &SiteCoefficients, t: usize) -> f64 {
        let k = self.config.n_seasonal_basis;
        let row = &self.basis[t * k..(t + 1) * k];
        c.intercept + c.slope * t as f64 + row.iter().zip(&c.seasonal).map(|(p, b)| p * b).sum::<f64>()
    }
}

/// Sites within `radius_km` of each site, itself included.
pub fn pooling_neighborhoods(grid: &SpatialGrid, radius_km: f64) -> Vec<Vec<usize>> {
    let n = grid.site_count();
    (0..n)
        .into_par_iter()
        .map(|s| {
            if radius_km == 0.0 {
                return vec![s];
            }
            (0..n).filter(|&o| o == s || grid.distance_km(s, o) <= radius_km).collect()
        })
        .collect()
}

/// Least-squares fit for `site` on the stacked rows of `neighborhood`.
pub fn fit_site<T: Scalar>(
    series: &FieldSeries<T>,
    design: &Design,
    site: usize,
    neighborhood: &[usize],
) -> Result<SiteCoefficients> {
    if series.n_times() != design.n_times() {
        return Err(Error::invalid("design horizon does not match the series"));
    }
    if neighborhood.is_empty() {
        return Err(Error::RankDeficient { site });
    }
    let w = 1.0 / neighborhood.len() as f64;
    let y: Vec<f64> = series
        .fields()
        .map(|f| neighborhood.iter().map(|&s| f[s].to_f64_lossless()).sum::<f64>() * w)
        .collect();
    let c = design.coefficients(&y);
    if !(c.intercept.is_finite() && c.slope.is_finite() && c.seasonal.iter().all(|b| b.is_finite())) {
        return Err(Error::RankDeficient { site });
    }
    Ok(c)
}

/// Fit every site in parallel.
pub fn fit_all<T: Scalar>(series: &FieldSeries<T>, config: &RegressionConfig) -> Result<Vec<SiteCoefficients>> {
    let design = Design::new(config, series.n_times())?;
    let hoods = pooling_neighborhoods(series.grid(), config.pooling_radius_km);
    hoods
        .par_iter()
        .enumerate()
        .map(|(s, hood)| fit_site(series, &design, s, hood))
        .collect()
}

/// `value − fitted mean` at every `(s, t)`.
pub fn anomalies<T: Scalar>(
    raw: &FieldSeries<T>,
    coeffs: &[SiteCoefficients],
    config: &RegressionConfig,
) -> Result<FieldSeries<T>> {
    if coeffs.len() != raw.site_count() || coeffs.iter().any(|c| c.seasonal.len() != config.n_seasonal_basis) {
        return Err(Error::invalid("coefficients do not match the series"));
    }
    let design = Design::new(config, raw.n_times())?;
    let n_sites = raw.site_count();
    let mut values = raw.values().to_vec();
    values.par_chunks_exact_mut(n_sites).enumerate().for_each(|(t, field)| {
        for (v, c) in field.iter_mut().zip(coeffs) {
            *v = T::from_f64_rounded(v.to_f64_lossless() - design.fitted(c, t));
        }
    });
    FieldSeries::new(raw.shared_grid(), raw.n_times(), values)
}

#[derive(Debug, Clone)]
pub struct Detrended<T> {
    pub anomalies: FieldSeries<T>,
    pub coefficients: Vec<SiteCoefficients>,
}

pub fn detrend<T: Scalar>(raw: &FieldSeries<T>, config: &RegressionConfig) -> Result<Detrended<T>> {
    let coefficients = fit_all(raw, config)?;
    let anomalies = anomalies(raw, &coefficients, config)?;
    Ok(Detrended {
        anomalies,
        coefficients,
    })
}

/// `site_id,b0,b1,b2,…` with one row per site.
pub fn coefficients_csv(coeffs: &[SiteCoefficients]) -> String {
    let k = coeffs.first().map_or(0, |c| c.seasonal.len());
    let mut out = String::from("site_id");
    for j in 0..k + 2 {
        let _ = write!(out, ",b{j}");
    }
    out.push('\n');
    for (s, c) in coeffs.iter().enumerate() {
        let _ = write!(out, "{s},{:.16e},{:.16e}", c.intercept, c.slope);
        for b in &c.seasonal {
            let _ = write!(out, ",{b:.16e}");
        }
        out.push('\n');
    }
    out
}
