//! Grids, field time series, thresholds and ordinal patterns.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cmp_finite, Scalar};

const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordSystem {
    /// Longitude/latitude in degrees; distances are great-circle kilometres.
    LonLat,
    /// Planar coordinates in kilometres; distances are Euclidean.
    PlanarKm,
}

impl CoordSystem {
    pub fn code(self) -> u8 {
        match self {
            CoordSystem::LonLat => 0,
            CoordSystem::PlanarKm => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CoordSystem::LonLat),
            1 => Some(CoordSystem::PlanarKm),
            _ => None,
        }
    }
}

/// Finite set of distinct observation sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    coords: Vec<(f64, f64)>,
    coord_system: CoordSystem,
}

impl SpatialGrid {
    pub fn new(coords: Vec<(f64, f64)>, coord_system: CoordSystem) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("grid needs at least one site"));
        }
        let mut seen = HashSet::with_capacity(coords.len());
        for (i, &(x, y)) in coords.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::invalid(format!("site {i} has non-finite coordinates")));
            }
            // +0.0 and -0.0 are the same location
            let key = ((x + 0.0).to_bits(), (y + 0.0).to_bits());
            if !seen.insert(key) {
                return Err(Error::invalid(format!("site {i} duplicates an earlier site ({x}, {y})")));
            }
        }
        Ok(Self {
            coords,
            coord_system,
        })
    }

    /// Row-major `nx × ny` lattice starting at `origin` with the given spacing.
    pub fn regular(
        nx: usize,
        ny: usize,
        origin: (f64, f64),
        spacing: f64,
        coord_system: CoordSystem,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("lattice dimensions must be positive"));
        }
        if !(spacing > 0.0) {
            return Err(Error::invalid("lattice spacing must be positive"));
        }
        let coords = (0..ny)
            .flat_map(|j| {
                (0..nx).map(move |i| (origin.0 + i as f64 * spacing, origin.1 + j as f64 * spacing))
            })
            .collect();
        Self::new(coords, coord_system)
    }

    pub fn site_count(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    pub fn coord(&self, site: usize) -> (f64, f64) {
        self.coords[site]
    }

    pub fn coord_system(&self) -> CoordSystem {
        self.coord_system
    }

    /// Distance in kilometres between two sites.
    pub fn distance_km(&self, a: usize, b: usize) -> f64 {
        let (x1, y1) = self.coords[a];
        let (x2, y2) = self.coords[b];
        match self.coord_system {
            CoordSystem::PlanarKm => (x1 - x2).hypot(y1 - y2),
            CoordSystem::LonLat => {
                let (lat1, lat2) = (y1.to_radians(), y2.to_radians());
                let dlat = lat2 - lat1;
                let dlon = (x2 - x1).to_radians();
                let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
                2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
            }
        }
    }

    /// Site closest to the coordinate centroid (lowest index on ties).
    pub fn central_site(&self) -> usize {
        let n = self.coords.len() as f64;
        let cx = self.coords.iter().map(|c| c.0).sum::<f64>() / n;
        let cy = self.coords.iter().map(|c| c.1).sum::<f64>() / n;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &(x, y)) in self.coords.iter().enumerate() {
            let d = (x - cx).powi(2) + (y - cy).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Dense time-major matrix: entry `(t, s)` is the field value at time `t`, site `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSeries<T> {
    grid: Arc<SpatialGrid>,
    n_times: usize,
    values: Vec<T>,
}

impl<T: Scalar> FieldSeries<T> {
    pub fn new(grid: Arc<SpatialGrid>, n_times: usize, values: Vec<T>) -> Result<Self> {
        if n_times == 0 {
            return Err(Error::invalid("series needs at least one time point"));
        }
        let expected = n_times * grid.site_count();
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "value matrix has {} entries, expected {n_times} x {} = {expected}",
                values.len(),
                grid.site_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let s = grid.site_count();
            return Err(Error::NonFinite(format!("time {}, site {}", i / s, i % s)));
        }
        Ok(Self {
            grid,
            n_times,
            values,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<SpatialGrid> {
        Arc::clone(&self.grid)
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn site_count(&self) -> usize {
        self.grid.site_count()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, t: usize, s: usize) -> T {
        self.values[t * self.site_count() + s]
    }

    /// The spatial field at time `t`.
    #[inline]
    pub fn field(&self, t: usize) -> &[T] {
        let n = self.site_count();
        &self.values[t * n..(t + 1) * n]
    }

    pub fn fields(&self) -> std::slice::ChunksExact<'_, T> {
        self.values.chunks_exact(self.site_count())
    }

    pub fn site_series(&self, s: usize) -> Vec<T> {
        self.fields().map(|f| f[s]).collect()
    }

    /// Apply `phi` entrywise. Fails if `phi` produces non-finite values.
    pub fn map<U: Scalar>(&self, phi: impl Fn(T) -> U) -> Result<FieldSeries<U>> {
        FieldSeries::new(
            self.shared_grid(),
            self.n_times,
            self.values.iter().map(|&v| phi(v)).collect(),
        )
    }

    /// Contiguous sub-series of times `start..end`.
    pub fn slice_times(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_times {
            return Err(Error::invalid(format!("bad time range {start}..{end}")));
        }
        let n = self.site_count();
        Ok(Self {
            grid: self.shared_grid(),
            n_times: end - start,
            values: self.values[start * n..end * n].to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSpec {
    /// Empirical quantile level in (0, 1) of the risk series.
    Quantile(f64),
    /// Absolute threshold value.
    Absolute(f64),
}

impl ThresholdSpec {
    pub fn quantile(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("quantile level {q} outside (0, 1)")));
        }
        Ok(ThresholdSpec::Quantile(q))
    }

    pub fn absolute(u: f64) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::invalid("threshold must be finite"));
        }
        Ok(ThresholdSpec::Absolute(u))
    }

    /// Resolve against a risk series.
    pub fn resolve(&self, risk_series: &[f64]) -> Result<f64> {
        match *self {
            ThresholdSpec::Quantile(q) => empirical_quantile(risk_series, q),
            ThresholdSpec::Absolute(u) => Ok(u),
        }
    }
}

/// Rank vector of a tie-free vector, or the tie marker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrdinalPattern {
    ranks: Vec<u8>,
    tie_flag: bool,
}

impl OrdinalPattern {
    pub fn tie() -> Self {
        Self {
            ranks: Vec::new(),
            tie_flag: true,
        }
    }

    /// Build from 1-based ranks; rejects anything that is not a permutation of 1..=len.
    pub fn from_ranks(ranks: Vec<u8>) -> Result<Self> {
        let mut seen = vec![false; ranks.len()];
        for &r in &ranks {
            let idx = r as usize;
            if idx == 0 || idx > ranks.len() || seen[idx - 1] {
                return Err(Error::invalid(format!("{ranks:?} is not a permutation")));
            }
            seen[idx - 1] = true;
        }
        Ok(Self {
            ranks,
            tie_flag: false,
        })
    }

    pub fn ranks(&self) -> &[u8] {
        &self.ranks
    }

    pub fn is_tie(&self) -> bool {
        self.tie_flag
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Position of this permutation in lexicographic order of all `len!` permutations.
    pub fn lex_index(&self) -> Option<usize> {
        if self.tie_flag {
            return None;
        }
        let n = self.ranks.len();
        let mut index = 0;
        for i in 0..n {
            let smaller_later = self.ranks[i + 1..].iter().filter(|&&r| r < self.ranks[i]).count();
            index = index * (n - i) + smaller_later;
        }
        Some(index)
    }
}

impl fmt::Display for OrdinalPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tie_flag {
            return f.write_str("ties");
        }
        f.write_str("(")?;
        for (i, r) in self.ranks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str(")")
    }
}

/// All permutations of `1..=len` in lexicographic order.
pub fn permutations(len: usize) -> Vec<OrdinalPattern> {
    fn rec(prefix: &mut Vec<u8>, used: &mut [bool], out: &mut Vec<OrdinalPattern>) {
        if prefix.len() == used.len() {
            out.push(OrdinalPattern {
                ranks: prefix.clone(),
                tie_flag: false,
            });
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v as u8 + 1);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(len), &mut vec![false; len], &mut out);
    out
}

/// Rank pattern of `v`: the permutation `π` with `v_i < v_j ⟺ π(i) < π(j)`.
///
/// Exactly equal entries give the tie marker. `-0.0` and `+0.0` compare equal
/// and therefore tie.
pub fn ordinal_pattern<T: Scalar>(v: &[T]) -> Result<OrdinalPattern> {
    if v.len() < 2 {
        return Err(Error::invalid(format!("ordinal pattern needs length >= 2, got {}", v.len())));
    }
    if v.len() > u8::MAX as usize {
        return Err(Error::invalid("ordinal pattern length too large"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("ordinal pattern of non-finite values"));
    }
    let mut ranks = Vec::with_capacity(v.len());
    for (i, &vi) in v.iter().enumerate() {
        let mut below = 0u8;
        for (j, &vj) in v.iter().enumerate() {
            if vj < vi {
                below += 1;
            } else if i != j && vj == vi {
                return Ok(OrdinalPattern::tie());
            }
        }
        ranks.push(below + 1);
    }
    Ok(OrdinalPattern {
        ranks,
        tie_flag: false,
    })
}

/// Order-statistic index `⌈q·n⌉` (1-based), clamped to `1..=n`.
///
/// Products within 1e-9 of an integer are snapped to it so that e.g. `0.07·100`
/// selects the 7th order statistic despite rounding in `q`.
pub fn order_statistic_rank(q: f64, n: usize) -> usize {
    let x = q * n as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (k as usize).clamp(1, n)
}

/// The `⌈q·n⌉`-th smallest value of `series`.
pub fn empirical_quantile<T: Scalar>(series: &[T], q: f64) -> Result<T> {
    if series.is_empty() {
        return Err(Error::invalid("quantile of an empty series"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("quantile level {q} outside (0, 1)")));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("quantile of non-finite values"));
    }
    let mut scratch = series.to_vec();
    Ok(select_order_statistic(&mut scratch, order_statistic_rank(q, series.len())))
}

/// k-th smallest (1-based) of finite values; reorders `values`.
pub(crate) fn select_order_statistic<T: Scalar>(values: &mut [T], k: usize) -> T {
    let (_, v, _) = values.select_nth_unstable_by(k - 1, cmp_finite);
    *v
}
