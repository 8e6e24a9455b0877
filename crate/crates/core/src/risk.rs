//! Risk functionals, spatial risk measures and location measures on one spatial field.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{order_statistic_rank, select_order_statistic, SpatialGrid};
use crate::scalar::Scalar;

/// Positively 1-homogeneous reduction of a field to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskFunctional {
    Max,
    Min,
    Mean,
    Median,
    Quantile(f64),
}

impl RiskFunctional {
    pub fn quantile(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("risk quantile level {p} outside (0, 1)")));
        }
        Ok(RiskFunctional::Quantile(p))
    }

    /// Level of the order statistic for order-based kinds; `None` for max/min/mean.
    fn level(self) -> Option<f64> {
        match self {
            RiskFunctional::Median => Some(0.5),
            RiskFunctional::Quantile(p) => Some(p),
            _ => None,
        }
    }

    /// True when the functional commutes with strictly increasing marginal maps.
    pub fn is_order_based(self) -> bool {
        !matches!(self, RiskFunctional::Mean)
    }
}

impl fmt::Display for RiskFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiskFunctional::Max => f.write_str("max"),
            RiskFunctional::Min => f.write_str("min"),
            RiskFunctional::Mean => f.write_str("mean"),
            RiskFunctional::Median => f.write_str("median"),
            RiskFunctional::Quantile(p) => write!(f, "quantile:{p}"),
        }
    }
}

impl FromStr for RiskFunctional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(RiskFunctional::Max),
            "min" => Ok(RiskFunctional::Min),
            "mean" => Ok(RiskFunctional::Mean),
            "median" => Ok(RiskFunctional::Median),
            other => match other.strip_prefix("quantile:") {
                Some(p) => RiskFunctional::quantile(
                    p.parse()
                        .map_err(|_| Error::invalid(format!("bad quantile level in '{other}'")))?,
                ),
                None => Err(Error::invalid(format!(
                    "unknown risk functional '{other}' (max|min|mean|median|quantile:<p>)"
                ))),
            },
        }
    }
}

/// `r(field)`. Order-based kinds return a stored value exactly; the mean is accumulated in f64.
pub fn apply_risk<T: Scalar>(r: RiskFunctional, field: &[T]) -> f64 {
    let mut scratch = Vec::new();
    apply_risk_with_scratch(r, field, &mut scratch)
}

/// Same as [`apply_risk`], reusing `scratch` for the order-statistic selection.
pub fn apply_risk_with_scratch<T: Scalar>(r: RiskFunctional, field: &[T], scratch: &mut Vec<T>) -> f64 {
    debug_assert!(!field.is_empty());
    match r {
        RiskFunctional::Max => field
            .iter()
            .fold(T::neg_infinity(), |m, &v| if v > m { v } else { m })
            .to_f64_lossless(),
        RiskFunctional::Min => field
            .iter()
            .fold(T::infinity(), |m, &v| if v < m { v } else { m })
            .to_f64_lossless(),
        RiskFunctional::Mean => {
            field.iter().map(|v| v.to_f64_lossless()).sum::<f64>() / field.len() as f64
        }
        RiskFunctional::Median | RiskFunctional::Quantile(_) => {
            let p = r.level().expect("order-based kind");
            scratch.clear();
            scratch.extend_from_slice(field);
            select_order_statistic(scratch, order_statistic_rank(p, field.len())).to_f64_lossless()
        }
    }
}

/// Exposure-weighted fraction of sites exceeding a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialRiskMeasure {
    exposure: Option<Vec<f64>>,
}

impl SpatialRiskMeasure {
    /// Unit exposure: the affected-area fraction.
    pub fn area() -> Self {
        Self { exposure: None }
    }

    pub fn with_exposure(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("exposure weights must be finite and nonnegative"));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::invalid("at least one exposure weight must be positive"));
        }
        Ok(Self {
            exposure: Some(weights),
        })
    }

    pub fn max_exposure(&self) -> f64 {
        self.exposure
            .as_ref()
            .map_or(1.0, |w| w.iter().copied().fold(0.0, f64::max))
    }
}

/// `(1/|S|) Σ_s E(s) 1{field(s) > u}`.
pub fn spatial_risk<T: Scalar>(m: &SpatialRiskMeasure, field: &[T], u: f64) -> f64 {
    let n = field.len() as f64;
    match &m.exposure {
        None => field.iter().filter(|v| v.to_f64_lossless() > u).count() as f64 / n,
        Some(w) => {
            assert_eq!(w.len(), field.len(), "exposure length must match site count");
            field
                .iter()
                .zip(w)
                .filter(|(v, _)| v.to_f64_lossless() > u)
                .map(|(_, w)| *w)
                .sum::<f64>()
                / n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationMeasure {
    /// Site of the field maximum (lowest index on ties).
    Peak,
    /// Mean coordinates of the exceeding sites.
    ExceedanceCentroid,
    /// Coordinates weighted by the positive part of the field.
    WeightedCentroid,
    /// Per-coordinate lower median over the exceeding sites.
    ComponentwiseMedian,
}

impl FromStr for LocationMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peak" => Ok(LocationMeasure::Peak),
            "exceedance_centroid" | "centroid" => Ok(LocationMeasure::ExceedanceCentroid),
            "weighted_centroid" => Ok(LocationMeasure::WeightedCentroid),
            "componentwise_median" | "median" => Ok(LocationMeasure::ComponentwiseMedian),
            other => Err(Error::invalid(format!("unknown location measure '{other}'"))),
        }
    }
}

/// Location of the event in `field` at threshold `u`; `None` when no site exceeds `u`.
///
/// The weighted centroid uses weights `max(field, 0)` so that anomaly fields with
/// negative values still give a location inside the grid's hull.
pub fn locate<T: Scalar>(c: LocationMeasure, grid: &SpatialGrid, field: &[T], u: f64) -> Option<(f64, f64)> {
    debug_assert_eq!(grid.site_count(), field.len());
    let exceeds = |v: &T| v.to_f64_lossless() > u;
    if !field.iter().any(exceeds) {
        return None;
    }
    match c {
        LocationMeasure::Peak => {
            let mut best = 0;
            for (i, v) in field.iter().enumerate().skip(1) {
                if *v > field[best] {
                    best = i;
                }
            }
            Some(grid.coord(best))
        }
        LocationMeasure::ExceedanceCentroid => {
            let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
            for (i, v) in field.iter().enumerate() {
                if exceeds(v) {
                    let (x, y) = grid.coord(i);
                    sx += x;
                    sy += y;
                    n += 1;
                }
            }
            Some((sx / n as f64, sy / n as f64))
        }
        LocationMeasure::WeightedCentroid => {
            let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
            for (i, v) in field.iter().enumerate() {
                let w = v.to_f64_lossless().max(0.0);
                if w > 0.0 {
                    let (x, y) = grid.coord(i);
                    sx += w * x;
                    sy += w * y;
                    sw += w;
                }
            }
            (sw > 0.0).then(|| (sx / sw, sy / sw))
        }
        LocationMeasure::ComponentwiseMedian => {
            let (mut xs, mut ys): (Vec<f64>, Vec<f64>) = field
                .iter()
                .enumerate()
                .filter(|(_, v)| exceeds(v))
                .map(|(i, _)| grid.coord(i))
                .unzip();
            let k = order_statistic_rank(0.5, xs.len());
            Some((select_order_statistic(&mut xs, k), select_order_statistic(&mut ys, k)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CoordSystem;
    use proptest::prelude::*;

    const KINDS: [RiskFunctional; 5] = [
        RiskFunctional::Max,
        RiskFunctional::Min,
        RiskFunctional::Mean,
        RiskFunctional::Median,
        RiskFunctional::Quantile(0.8),
    ];

    fn square() -> SpatialGrid {
        SpatialGrid::new(vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)], CoordSystem::PlanarKm).unwrap()
    }

    #[test]
    fn risk_examples() {
        assert_eq!(apply_risk(RiskFunctional::Max, &[1.0, 4.0, 2.0]), 4.0);
        assert_eq!(apply_risk(RiskFunctional::Mean, &[1.0, 4.0, 2.0, 5.0]), 3.0);
        assert_eq!(apply_risk(RiskFunctional::Median, &[1.0, 2.0, 3.0, 4.0]), 2.0);
        assert_eq!(apply_risk(RiskFunctional::Min, &[3.0f32, -1.0, 2.0]), -1.0);
        assert_eq!(apply_risk(RiskFunctional::Quantile(0.75), &[4.0, 1.0, 3.0, 2.0]), 3.0);
    }

    #[test]
    fn parse_risk() {
        assert_eq!("median".parse::<RiskFunctional>().unwrap(), RiskFunctional::Median);
        assert_eq!("quantile:0.9".parse::<RiskFunctional>().unwrap(), RiskFunctional::Quantile(0.9));
        assert!("quantile:1.5".parse::<RiskFunctional>().is_err());
        assert!("sum".parse::<RiskFunctional>().is_err());
    }

    #[test]
    fn spatial_risk_examples() {
        let mut f = vec![0.0; 10];
        f[2] = 2.0;
        f[5] = 3.0;
        f[7] = 1.5;
        assert!((spatial_risk(&SpatialRiskMeasure::area(), &f, 1.0) - 0.3).abs() < 1e-15);
        assert_eq!(spatial_risk(&SpatialRiskMeasure::area(), &[5.0; 10], 1.0), 1.0);
        let mut w = vec![0.0; 10];
        w[0] = 2.0;
        let m = SpatialRiskMeasure::with_exposure(w).unwrap();
        let mut g = vec![0.0; 10];
        g[0] = 4.0;
        assert!((spatial_risk(&m, &g, 1.0) - 0.2).abs() < 1e-15);
        assert!(SpatialRiskMeasure::with_exposure(vec![0.0; 3]).is_err());
        assert!(SpatialRiskMeasure::with_exposure(vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn locate_examples() {
        let g = square();
        assert_eq!(locate(LocationMeasure::ExceedanceCentroid, &g, &[2.0; 4], 1.0), Some((0.5, 0.5)));
        let tri = SpatialGrid::new(vec![(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (5.0, 5.0)], CoordSystem::PlanarKm).unwrap();
        assert_eq!(
            locate(LocationMeasure::ComponentwiseMedian, &tri, &[3.0, 3.0, 3.0, 0.0], 1.0),
            Some((0.0, 0.0))
        );
        for c in [
            LocationMeasure::Peak,
            LocationMeasure::ExceedanceCentroid,
            LocationMeasure::WeightedCentroid,
            LocationMeasure::ComponentwiseMedian,
        ] {
            assert_eq!(locate(c, &g, &[0.1, 0.2, 0.3, 0.4], 1.0), None);
        }
        // peak ties resolve to the lowest index
        assert_eq!(locate(LocationMeasure::Peak, &g, &[1.0, 3.0, 3.0, 2.0], 0.5), Some((1.0, 0.0)));
        // weighted centroid ignores negative anomalies
        assert_eq!(
            locate(LocationMeasure::WeightedCentroid, &g, &[-5.0, 2.0, -1.0, 2.0], 1.0),
            Some((1.0, 0.5))
        );
    }

    fn field() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..100.0, 1..60)
    }

    proptest! {
        #[test]
        fn homogeneity(f in field(), ci in 0usize..3) {
            let c = [0.5, 2.0, 10.0][ci];
            let scaled: Vec<f64> = f.iter().map(|v| c * v).collect();
            for r in KINDS {
                let a = apply_risk(r, &scaled);
                let b = c * apply_risk(r, &f);
                prop_assert!((a - b).abs() <= 1e-12 * b.abs());
            }
        }

        #[test]
        fn order_based_commute_with_cube(f in field()) {
            let cubed: Vec<f64> = f.iter().map(|v| v.powi(3)).collect();
            for r in KINDS.into_iter().filter(|r| r.is_order_based()) {
                prop_assert_eq!(apply_risk(r, &cubed), apply_risk(r, &f).powi(3));
            }
        }

        #[test]
        fn spatial_risk_nonincreasing(f in field(), u1 in 0.0f64..100.0, du in 0.0f64..50.0) {
            let m = SpatialRiskMeasure::area();
            prop_assert!(spatial_risk(&m, &f, u1 + du) <= spatial_risk(&m, &f, u1));
        }

        #[test]
        fn locate_invariant_under_increasing_maps(vals in prop::collection::vec(0.01f64..10.0, 4), u in 0.5f64..5.0) {
            let g = square();
            let phi = |x: f64| x.powi(3) + x;
            let mapped: Vec<f64> = vals.iter().map(|&v| phi(v)).collect();
            for c in [LocationMeasure::Peak, LocationMeasure::ExceedanceCentroid, LocationMeasure::ComponentwiseMedian] {
                prop_assert_eq!(locate(c, &g, &vals, u), locate(c, &g, &mapped, phi(u)));
            }
        }
    }

    #[test]
    fn mean_does_not_commute() {
        let f = [1.0, 2.0, 6.0];
        let cubed: Vec<f64> = f.iter().map(|v: &f64| v.powi(3)).collect();
        assert_ne!(apply_risk(RiskFunctional::Mean, &cubed), apply_risk(RiskFunctional::Mean, &f).powi(3));
    }

    #[test]
    fn weighted_centroid_not_invariant() {
        let g = square();
        let f = [1.0, 2.0, 3.0, 4.0];
        let cubed: Vec<f64> = f.iter().map(|v: &f64| v.powi(3)).collect();
        assert_ne!(
            locate(LocationMeasure::WeightedCentroid, &g, &f, 0.5),
            locate(LocationMeasure::WeightedCentroid, &g, &cubed, 0.125)
        );
    }
}
