//! Monte Carlo evaluation of the limiting cluster-size and pattern distributions.
//!
//! With unit Fréchet margins (α = 1) the exponent measure of the process on a
//! finite window is `μ(A) = E ∫₀^∞ 1{u·V ∈ A} u⁻² du`, where `V` is a spectral
//! function anchored at `(s*, 0)`. Every limit is a ratio `μ(A)/μ(A₀)`, and the
//! events used here confine `1/u` to an interval determined by the risk values
//! `r(V_t)`, so the `u`-integral is available in closed form. Quantities that
//! depend on pointwise exceedances (area, location) are integrated numerically
//! over `η = 1/u`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{pattern_labels, size_labels, PatternScope, MAX_PATTERN_LENGTH};
use crate::error::{Error, Result};
use crate::field::{ordinal_pattern, OrdinalPattern, SpatialGrid};
use crate::risk::{apply_risk_with_scratch, locate, spatial_risk, LocationMeasure, RiskFunctional, SpatialRiskMeasure};
use crate::simulate::{SeparableIncrementSampler, VariogramSpec};

const CHUNK: usize = 1024;

/// Spectral function values on `S × {−1, …, window}`, time-major, anchored at `(anchor_site, 0)`.
///
/// `weight` multiplies every numerator and denominator computed from the draw;
/// it is 1 unless the source samples under a change of measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDraw {
    n_sites: usize,
    window: usize,
    anchor_site: usize,
    weight: f64,
    values: Vec<f64>,
}

impl SpectralDraw {
    pub fn zeros(n_sites: usize, window: usize) -> Self {
        Self {
            n_sites,
            window,
            anchor_site: 0,
            weight: 1.0,
            values: vec![0.0; n_sites * (window + 2)],
        }
    }

    /// Validating constructor: anchor value exactly 1, everything finite and nonnegative.
    pub fn new(n_sites: usize, window: usize, anchor_site: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_sites * (window + 2) || anchor_site >= n_sites {
            return Err(Error::invalid("spectral draw has the wrong shape"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("spectral draw values must be finite and nonnegative"));
        }
        if values[n_sites + anchor_site] != 1.0 {
            return Err(Error::invalid("spectral draw must equal 1 at the anchor"));
        }
        Ok(Self {
            n_sites,
            window,
            anchor_site,
            weight: 1.0,
            values,
        })
    }

    pub fn anchor_site(&self) -> usize {
        self.anchor_site
    }

    pub fn set_anchor_site(&mut self, site: usize) {
        self.anchor_site = site;
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn set_weight(&mut self, weight: f64) {
        self.weight = weight;
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn anchor_value(&self) -> f64 {
        self.at(0)[self.anchor_site]
    }

    /// Field at relative time `t ∈ −1..=window`.
    pub fn at(&self, t: i64) -> &[f64] {
        let i = (t + 1) as usize;
        &self.values[i * self.n_sites..(i + 1) * self.n_sites]
    }

    pub fn at_mut(&mut self, t: i64) -> &mut [f64] {
        let i = (t + 1) as usize;
        &mut self.values[i * self.n_sites..(i + 1) * self.n_sites]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Source of anchored spectral functions.
pub trait SpectralSource: Sync {
    fn grid(&self) -> &SpatialGrid;
    fn window(&self) -> usize;
    /// Overwrite `out` with a fresh draw, including its anchor and weight.
    fn draw(&self, rng: &mut ChaCha8Rng, out: &mut SpectralDraw);
}

/// Brown–Resnick spectral functions `V = exp(W − γ(· − (s*, 0)))`.
///
/// With several candidate anchors each draw picks `s*` uniformly and carries
/// weight `1 / mean_s V(s, 0)`. Tilting a spectral process by `V(y)` and
/// renormalising at `y` gives the process anchored at `y`, so for 1-homogeneous
/// `f` the fixed-anchor mean `E f(V)` equals
/// `|S|⁻¹ Σ_s E[f(V^{(s,0)}) / mean V^{(s,0)}(·, 0)]`. Every weighted term the
/// oracle uses is then bounded by `|S|`, which removes the log-normal tail.
#[derive(Debug, Clone)]
pub struct BrownResnickSource {
    grid: Arc<SpatialGrid>,
    anchors: Vec<usize>,
    samplers: Vec<SeparableIncrementSampler>,
    window: usize,
}

impl BrownResnickSource {
    /// Plain estimator with one fixed anchor.
    pub fn new(spec: &VariogramSpec, grid: Arc<SpatialGrid>, anchor_site: usize, window: usize) -> Result<Self> {
        Self::with_anchors(spec, grid, vec![anchor_site], window)
    }

    /// Anchor drawn uniformly over all sites, with the mixture weight.
    pub fn mixture(spec: &VariogramSpec, grid: Arc<SpatialGrid>, window: usize) -> Result<Self> {
        let anchors = (0..grid.site_count()).collect();
        Self::with_anchors(spec, grid, anchors, window)
    }

    fn with_anchors(spec: &VariogramSpec, grid: Arc<SpatialGrid>, anchors: Vec<usize>, window: usize) -> Result<Self> {
        let samplers = anchors
            .iter()
            .map(|&a| SeparableIncrementSampler::new(spec, &grid, a, -1, window as i64))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid,
            anchors,
            samplers,
            window,
        })
    }
}

impl SpectralSource for BrownResnickSource {
    fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    fn window(&self) -> usize {
        self.window
    }

    fn draw(&self, rng: &mut ChaCha8Rng, out: &mut SpectralDraw) {
        let k = if self.anchors.len() == 1 {
            0
        } else {
            rng.random_range(0..self.anchors.len())
        };
        let sampler = &self.samplers[k];
        let mut spatial = vec![0.0; sampler.n_sites()];
        let mut temporal = vec![0.0; sampler.n_lags()];
        sampler.spectral_factors(rng, &mut spatial, &mut temporal);
        for (i, &b) in temporal.iter().enumerate() {
            let t = i as i64 - 1;
            for (v, &a) in out.at_mut(t).iter_mut().zip(&spatial) {
                *v = a * b;
            }
        }
        out.set_anchor_site(self.anchors[k]);
        let weight = if self.anchors.len() == 1 {
            1.0
        } else {
            // V(·, 0) = spatial · temporal[lag 0] and temporal[lag 0] = 1
            spatial.len() as f64 / spatial.iter().sum::<f64>()
        };
        out.set_weight(weight);
    }
}

/// Where spectral functions are anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// Uniform over sites with the mixture weight (lower variance).
    #[default]
    Mixture,
    /// The site nearest the grid centroid.
    Central,
    Site(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub variogram: VariogramSpec,
    /// Largest relative time `ℓ` of the draw window `−1..=ℓ`.
    pub window: usize,
    pub anchor: Anchor,
    pub draws: usize,
    pub quadrature_points: usize,
    pub rng_seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            variogram: VariogramSpec::default(),
            window: 3,
            anchor: Anchor::Mixture,
            draws: 1_000_000,
            quadrature_points: 200,
            rng_seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws < 10_000 {
            return Err(Error::invalid(format!("need at least 10^4 draws, got {}", self.draws)));
        }
        if self.quadrature_points < 50 {
            return Err(Error::invalid(format!("need at least 50 quadrature points, got {}", self.quadrature_points)));
        }
        self.variogram.validate()
    }

    pub fn source(&self, grid: Arc<SpatialGrid>, window: usize) -> Result<BrownResnickSource> {
        let window = window.max(self.window);
        match self.anchor {
            Anchor::Mixture => BrownResnickSource::mixture(&self.variogram, grid, window),
            Anchor::Central => {
                let site = grid.central_site();
                BrownResnickSource::new(&self.variogram, grid, site, window)
            }
            Anchor::Site(site) => {
                if site >= grid.site_count() {
                    return Err(Error::invalid(format!("anchor site {site} not on the grid")));
                }
                BrownResnickSource::new(&self.variogram, grid, site, window)
            }
        }
    }
}

/// One draw from the configured Brown–Resnick spectral process.
pub fn draw_spectral(config: &OracleConfig, grid: Arc<SpatialGrid>) -> Result<SpectralDraw> {
    let source = config.source(grid, config.window)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut out = SpectralDraw::zeros(source.grid().site_count(), source.window());
    source.draw(&mut rng, &mut out);
    Ok(out)
}

/// Statistic of the exceedance set `{V_t > η}` tracked by the functional-pattern oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalStat {
    /// The risk functional of `V_t / η`; its pattern does not depend on `η`.
    Risk,
    Area(SpatialRiskMeasure),
    Longitude(LocationMeasure),
    Latitude(LocationMeasure),
}

impl FunctionalStat {
    fn name(&self) -> &'static str {
        match self {
            FunctionalStat::Risk => "risk",
            FunctionalStat::Area(_) => "area",
            FunctionalStat::Longitude(_) => "longitude",
            FunctionalStat::Latitude(_) => "latitude",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleFamily {
    /// Closed-form cluster sizes `1..=max_size` plus overflow.
    ClusterSize { max_size: usize },
    /// Same quantity by midpoint quadrature over `η ∈ (0, r(V_0))` with the
    /// cluster event checked pointwise.
    ClusterSizeQuadrature { max_size: usize },
    /// Closed-form ordinal patterns of the risk values.
    PatternIntensity { len: usize, scope: PatternScope },
    /// Same quantity by pointwise quadrature over `η ∈ (0, r(V_0))`.
    PatternIntensityQuadrature { len: usize, scope: PatternScope },
    /// Patterns of an exceedance-set statistic, quadrature over the conditioning interval.
    PatternFunctional {
        len: usize,
        scope: PatternScope,
        stat: FunctionalStat,
    },
}

impl OracleFamily {
    /// Report name, matching the empirical families of an analysis.
    pub fn name(&self) -> String {
        let scope = |s: &PatternScope| match s {
            PatternScope::AtLeast => "",
            PatternScope::Exactly => "/exact",
        };
        match self {
            OracleFamily::ClusterSize { .. } => "cluster_size".into(),
            OracleFamily::ClusterSizeQuadrature { .. } => "cluster_size/quadrature".into(),
            OracleFamily::PatternIntensity { len, scope: s } => format!("intensity/l{len}{}", scope(s)),
            OracleFamily::PatternIntensityQuadrature { len, scope: s } => {
                format!("intensity/l{len}{}/quadrature", scope(s))
            }
            OracleFamily::PatternFunctional { len, scope: s, stat } => {
                format!("{}/l{len}{}", stat.name(), scope(s))
            }
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            OracleFamily::ClusterSize { max_size } | OracleFamily::ClusterSizeQuadrature { max_size } => {
                size_labels(*max_size)
            }
            OracleFamily::PatternIntensity { len, .. }
            | OracleFamily::PatternIntensityQuadrature { len, .. }
            | OracleFamily::PatternFunctional { len, .. } => pattern_labels(*len),
        }
    }

    /// Largest relative time the family reads.
    pub fn required_window(&self) -> usize {
        match self {
            OracleFamily::ClusterSize { max_size } | OracleFamily::ClusterSizeQuadrature { max_size } => *max_size,
            OracleFamily::PatternIntensity { len, scope }
            | OracleFamily::PatternIntensityQuadrature { len, scope }
            | OracleFamily::PatternFunctional { len, scope, .. } => match scope {
                PatternScope::AtLeast => len - 1,
                PatternScope::Exactly => *len,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OracleFamily::ClusterSize { max_size } | OracleFamily::ClusterSizeQuadrature { max_size } => {
                if *max_size == 0 {
                    return Err(Error::invalid("max cluster size must be >= 1"));
                }
            }
            OracleFamily::PatternIntensity { len, .. }
            | OracleFamily::PatternIntensityQuadrature { len, .. }
            | OracleFamily::PatternFunctional { len, .. } => {
                if !(2..=MAX_PATTERN_LENGTH).contains(len) {
                    return Err(Error::invalid(format!("pattern length {len} outside 2..={MAX_PATTERN_LENGTH}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub label: String,
    /// Estimate clamped to `[0, 1]`.
    pub prob: f64,
    /// Unclamped ratio of Monte Carlo means.
    pub raw: f64,
    /// Delta-method Monte Carlo standard error of the ratio.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDistribution {
    pub family: String,
    pub values: Vec<OracleValue>,
    pub denominator_mean: f64,
    pub denominator_se: f64,
    pub draws: usize,
}

impl OracleDistribution {
    pub fn get(&self, label: &str) -> Option<&OracleValue> {
        self.values.iter().find(|v| v.label == label)
    }
}

/// Per-family running sums of numerators `a`, denominator `b` and cross terms.
#[derive(Debug, Clone)]
struct Accumulator {
    sum_a: Vec<f64>,
    sum_aa: Vec<f64>,
    sum_ab: Vec<f64>,
    sum_b: f64,
    sum_bb: f64,
}

impl Accumulator {
    fn new(n_labels: usize) -> Self {
        Self {
            sum_a: vec![0.0; n_labels],
            sum_aa: vec![0.0; n_labels],
            sum_ab: vec![0.0; n_labels],
            sum_b: 0.0,
            sum_bb: 0.0,
        }
    }

    fn push(&mut self, a: &[f64], b: f64, weight: f64) {
        let b = b * weight;
        for (i, &ai) in a.iter().enumerate() {
            let ai = ai * weight;
            self.sum_a[i] += ai;
            self.sum_aa[i] += ai * ai;
            self.sum_ab[i] += ai * b;
        }
        self.sum_b += b;
        self.sum_bb += b * b;
    }

    fn merge(&mut self, other: &Accumulator) {
        for i in 0..self.sum_a.len() {
            self.sum_a[i] += other.sum_a[i];
            self.sum_aa[i] += other.sum_aa[i];
            self.sum_ab[i] += other.sum_ab[i];
        }
        self.sum_b += other.sum_b;
        self.sum_bb += other.sum_bb;
    }

    fn finish(&self, family: String, labels: Vec<String>, m: usize) -> Result<OracleDistribution> {
        let mf = m as f64;
        let mean_b = self.sum_b / mf;
        let var_b = (self.sum_bb / mf - mean_b * mean_b).max(0.0);
        let se_b = (var_b / mf).sqrt();
        if mean_b <= 3.0 * se_b {
            return Err(Error::TemporallyDegenerate { mean: mean_b, se: se_b });
        }
        let values = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| {
                let raw = self.sum_a[i] / self.sum_b;
                let resid = self.sum_aa[i] - 2.0 * raw * self.sum_ab[i] + raw * raw * self.sum_bb;
                let se = (resid.max(0.0) / mf).sqrt() / (mean_b * mf.sqrt());
                OracleValue {
                    label,
                    prob: raw.clamp(0.0, 1.0),
                    raw,
                    se,
                }
            })
            .collect();
        Ok(OracleDistribution {
            family,
            values,
            denominator_mean: mean_b,
            denominator_se: se_b,
            draws: m,
        })
    }
}

struct Evaluator<'a> {
    families: &'a [OracleFamily],
    risk: RiskFunctional,
    grid: &'a SpatialGrid,
    quadrature_points: usize,
}

impl Evaluator<'_> {
    fn pattern_label(values: &[f64]) -> usize {
        let n_perm: usize = (1..=values.len()).product();
        ordinal_pattern(values)
            .ok()
            .and_then(|p: OrdinalPattern| p.lex_index())
            .unwrap_or(n_perm)
    }

    fn stat(&self, stat: &FunctionalStat, field: &[f64], r_value: f64, eta: f64) -> f64 {
        match stat {
            FunctionalStat::Risk => r_value / eta,
            FunctionalStat::Area(m) => spatial_risk(m, field, eta),
            FunctionalStat::Longitude(c) => locate(*c, self.grid, field, eta).map_or(f64::NAN, |p| p.0),
            FunctionalStat::Latitude(c) => locate(*c, self.grid, field, eta).map_or(f64::NAN, |p| p.1),
        }
    }

    /// Evaluate every family on one draw, writing numerators into `nums[f]`
    /// and returning denominators.
    fn eval(&self, draw: &SpectralDraw, risk_vals: &mut Vec<f64>, scratch: &mut Vec<f64>, nums: &mut [Vec<f64>], dens: &mut [f64]) {
        risk_vals.clear();
        for t in -1..=draw.window() as i64 {
            risk_vals.push(apply_risk_with_scratch(self.risk, draw.at(t), scratch));
        }
        // r(V_t) for t = −1, 0, 1, …
        let rv = |t: i64| risk_vals[(t + 1) as usize];
        let min_over = |len: usize| (0..len as i64).map(rv).fold(f64::INFINITY, f64::min);
        let q = self.quadrature_points;

        for (f, family) in self.families.iter().enumerate() {
            let num = &mut nums[f];
            num.fill(0.0);
            match family {
                OracleFamily::ClusterSize { max_size } => {
                    for l in 1..=*max_size {
                        num[l - 1] = (min_over(l) - rv(-1).max(rv(l as i64))).max(0.0);
                    }
                    num[*max_size] = (min_over(max_size + 1) - rv(-1)).max(0.0);
                    dens[f] = (rv(0) - rv(-1)).max(0.0);
                }
                OracleFamily::ClusterSizeQuadrature { max_size } => {
                    let top = rv(0);
                    let h = top / q as f64;
                    let mut den = 0.0;
                    for i in 0..q {
                        let eta = (i as f64 + 0.5) * h;
                        if rv(-1) / eta > 1.0 || rv(0) / eta <= 1.0 {
                            continue;
                        }
                        den += h;
                        let mut size = 1;
                        while size <= *max_size && rv(size as i64) / eta > 1.0 {
                            size += 1;
                        }
                        num[size - 1] += h;
                    }
                    dens[f] = den;
                }
                OracleFamily::PatternIntensity { len, scope } => {
                    let lower = match scope {
                        PatternScope::AtLeast => rv(-1),
                        PatternScope::Exactly => rv(-1).max(rv(*len as i64)),
                    };
                    let w = (min_over(*len) - lower).max(0.0);
                    if w > 0.0 {
                        num[Self::pattern_label(&risk_vals[1..=*len])] = w;
                    }
                    dens[f] = w;
                }
                OracleFamily::PatternIntensityQuadrature { len, scope } => {
                    let top = rv(0);
                    let h = top / q as f64;
                    let mut den = 0.0;
                    let mut scaled = vec![0.0; *len];
                    for i in 0..q {
                        let eta = (i as f64 + 0.5) * h;
                        let mut event = rv(-1) / eta <= 1.0 && (0..*len as i64).all(|t| rv(t) / eta > 1.0);
                        if *scope == PatternScope::Exactly {
                            event &= rv(*len as i64) / eta <= 1.0;
                        }
                        if !event {
                            continue;
                        }
                        den += h;
                        for (t, s) in scaled.iter_mut().enumerate() {
                            *s = rv(t as i64) / eta;
                        }
                        num[Self::pattern_label(&scaled)] += h;
                    }
                    dens[f] = den;
                }
                OracleFamily::PatternFunctional { len, scope, stat } => {
                    let lower = match scope {
                        PatternScope::AtLeast => rv(-1),
                        PatternScope::Exactly => rv(-1).max(rv(*len as i64)),
                    };
                    let upper = min_over(*len);
                    let w = (upper - lower).max(0.0);
                    dens[f] = w;
                    if w > 0.0 {
                        let h = w / q as f64;
                        let mut stats = vec![0.0; *len];
                        for i in 0..q {
                            let eta = lower + (i as f64 + 0.5) * h;
                            for (t, s) in stats.iter_mut().enumerate() {
                                *s = self.stat(stat, draw.at(t as i64), rv(t as i64), eta);
                            }
                            if stats.iter().all(|s| s.is_finite()) {
                                num[Self::pattern_label(&stats)] += h;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Estimate every family from `draws` spectral functions of `source`.
///
/// Draws are generated in fixed chunks with per-chunk ChaCha streams and
/// reduced in chunk order, so results do not depend on the thread count.
pub fn run_oracle<S: SpectralSource>(
    source: &S,
    families: &[OracleFamily],
    risk: RiskFunctional,
    draws: usize,
    quadrature_points: usize,
    rng_seed: u64,
) -> Result<Vec<OracleDistribution>> {
    if draws == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    if quadrature_points == 0 {
        return Err(Error::invalid("need at least one quadrature point"));
    }
    for f in families {
        f.validate()?;
        if f.required_window() > source.window() {
            return Err(Error::invalid(format!(
                "family {} needs window {} but draws cover {}",
                f.name(),
                f.required_window(),
                source.window()
            )));
        }
    }
    let labels: Vec<Vec<String>> = families.iter().map(OracleFamily::labels).collect();
    let evaluator = Evaluator {
        families,
        risk,
        grid: source.grid(),
        quadrature_points,
    };
    let n_chunks = draws.div_ceil(CHUNK);
    let partials: Vec<Vec<Accumulator>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(c as u64);
            let mut accs: Vec<Accumulator> = labels.iter().map(|l| Accumulator::new(l.len())).collect();
            let mut draw = SpectralDraw::zeros(source.grid().site_count(), source.window());
            let mut nums: Vec<Vec<f64>> = labels.iter().map(|l| vec![0.0; l.len()]).collect();
            let mut dens = vec![0.0; families.len()];
            let mut risk_vals = Vec::new();
            let mut scratch = Vec::new();
            let count = CHUNK.min(draws - c * CHUNK);
            for _ in 0..count {
                source.draw(&mut rng, &mut draw);
                evaluator.eval(&draw, &mut risk_vals, &mut scratch, &mut nums, &mut dens);
                for (f, acc) in accs.iter_mut().enumerate() {
                    acc.push(&nums[f], dens[f], draw.weight());
                }
            }
            accs
        })
        .collect();
    let mut total: Vec<Accumulator> = labels.iter().map(|l| Accumulator::new(l.len())).collect();
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
        .iter()
        .zip(families)
        .zip(labels)
        .map(|((acc, fam), labels)| acc.finish(fam.name(), labels, draws))
        .collect()
}

fn single_value(
    config: &OracleConfig,
    grid: Arc<SpatialGrid>,
    family: OracleFamily,
    risk: RiskFunctional,
    label: &str,
) -> Result<OracleValue> {
    config.validate()?;
    let source = config.source(grid, family.required_window())?;
    let dist = run_oracle(&source, &[family], risk, config.draws, config.quadrature_points, config.rng_seed)?;
    dist[0]
        .get(label)
        .cloned()
        .ok_or_else(|| Error::invalid(format!("unknown label {label}")))
}

/// Limit probability that a cluster has exactly `len` time points.
pub fn oracle_cluster_size(
    config: &OracleConfig,
    grid: Arc<SpatialGrid>,
    len: usize,
    risk: RiskFunctional,
) -> Result<OracleValue> {
    single_value(config, grid, OracleFamily::ClusterSize { max_size: len }, risk, &len.to_string())
}

/// Limit probability of intensity pattern `pattern` at the start of clusters of size ≥ its length.
pub fn oracle_pattern_intensity(
    config: &OracleConfig,
    grid: Arc<SpatialGrid>,
    pattern: &OrdinalPattern,
    risk: RiskFunctional,
) -> Result<OracleValue> {
    let family = OracleFamily::PatternIntensity {
        len: pattern.len(),
        scope: PatternScope::AtLeast,
    };
    single_value(config, grid, family, risk, &pattern.to_string())
}

/// Limit probability of a pattern of an exceedance-set statistic.
pub fn oracle_pattern_functional(
    config: &OracleConfig,
    grid: Arc<SpatialGrid>,
    pattern: &OrdinalPattern,
    risk: RiskFunctional,
    stat: FunctionalStat,
) -> Result<OracleValue> {
    let family = OracleFamily::PatternFunctional {
        len: pattern.len(),
        scope: PatternScope::AtLeast,
        stat,
    };
    single_value(config, grid, family, risk, &pattern.to_string())
}
