//! Tail-pattern analysis of gridded space-time fields.
//!
//! Risk functionals summarise each spatial field to a scalar; exceedances of
//! that series form clusters whose sizes and ordinal patterns are estimated
//! with block-bootstrap intervals and compared against Monte Carlo limits
//! computed from Brown–Resnick spectral functions.

pub mod bootstrap;
pub mod cluster;
pub mod detrend;
pub mod error;
pub mod field;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod risk;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use field::{CoordSystem, FieldSeries, OrdinalPattern, SpatialGrid, ThresholdSpec};
pub use risk::{LocationMeasure, RiskFunctional, SpatialRiskMeasure};
pub use scalar::Scalar;

/// Single-precision storage, the on-disk layout.
pub type FieldSeriesF32 = FieldSeries<f32>;
pub type FieldSeriesF64 = FieldSeries<f64>;
