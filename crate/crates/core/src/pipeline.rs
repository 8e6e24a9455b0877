//! Command orchestration: configs, reports and their file formats.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{attach_bootstrap, BootstrapConfig};
use crate::cluster::{
    cluster_size_distribution_from, extract_clusters, pattern_distribution_from, risk_series, ClusterIndex,
    PatternDistribution, PatternScope, DEFAULT_MAX_CLUSTER_SIZE, MAX_PATTERN_LENGTH,
};
use crate::detrend::{coefficients_csv, detrend, RegressionConfig};
use crate::error::{Error, Result};
use crate::field::{CoordSystem, FieldSeries, SpatialGrid, ThresholdSpec};
use crate::io::{default_sites_path, read_binary, read_csv, write_atomic, write_binary, write_csv, DataFormat};
use crate::oracle::{run_oracle, FunctionalStat, OracleConfig, OracleFamily};
use crate::risk::{locate, spatial_risk, LocationMeasure, RiskFunctional, SpatialRiskMeasure};
use crate::scalar::Scalar;
use crate::simulate::{simulate, SimConfig, VariogramSpec};

/// Where a field series lives on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputSpec {
    pub path: PathBuf,
    /// Inferred from the extension when absent.
    pub format: Option<DataFormat>,
    /// CSV sidecar; defaults to `sites.csv` beside the data file.
    pub sites: Option<PathBuf>,
    /// Coordinate system of a CSV sidecar (binary files carry their own).
    pub coord_system: CoordSystem,
}

impl Default for InputSpec {
    fn default() -> Self {
        Self {
            path: PathBuf::new(),
            format: None,
            sites: None,
            coord_system: CoordSystem::LonLat,
        }
    }
}

impl InputSpec {
    pub fn load(&self) -> Result<FieldSeries<f32>> {
        if self.path.as_os_str().is_empty() {
            return Err(Error::invalid("no input path given"));
        }
        match self.format.unwrap_or_else(|| DataFormat::infer(&self.path)) {
            DataFormat::Binary => read_binary(&self.path),
            DataFormat::Csv => {
                let sites = self.sites.clone().unwrap_or_else(|| default_sites_path(&self.path));
                read_csv(&self.path, &sites, self.coord_system)
            }
        }
    }
}

fn save_series<T: Scalar>(path: &Path, format: Option<DataFormat>, series: &FieldSeries<T>) -> Result<()> {
    match format.unwrap_or_else(|| DataFormat::infer(path)) {
        DataFormat::Binary => write_binary(path, series),
        DataFormat::Csv => write_csv(path, &default_sites_path(path), series),
    }
}

/// Regular rectangular grid, row-major from `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub origin: (f64, f64),
    pub spacing: f64,
    pub coord_system: CoordSystem,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 7,
            ny: 7,
            origin: (40.0, 16.5),
            spacing: 0.25,
            coord_system: CoordSystem::LonLat,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<SpatialGrid>> {
        Ok(Arc::new(SpatialGrid::regular(
            self.nx,
            self.ny,
            self.origin,
            self.spacing,
            self.coord_system,
        )?))
    }
}

/// Exceedance-set statistics whose within-cluster patterns are estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatSelection {
    pub area: bool,
    pub longitude: bool,
    pub latitude: bool,
    pub location: LocationMeasure,
    /// Exposure weights for the area statistic; uniform when absent.
    pub exposure: Option<Vec<f64>>,
}

impl Default for StatSelection {
    fn default() -> Self {
        Self {
            area: true,
            longitude: true,
            latitude: true,
            location: LocationMeasure::ExceedanceCentroid,
            exposure: None,
        }
    }
}

impl StatSelection {
    fn stats(&self) -> Result<Vec<FunctionalStat>> {
        let mut out = Vec::new();
        if self.area {
            let m = match &self.exposure {
                Some(w) => SpatialRiskMeasure::with_exposure(w.clone())?,
                None => SpatialRiskMeasure::area(),
            };
            out.push(FunctionalStat::Area(m));
        }
        if self.longitude {
            out.push(FunctionalStat::Longitude(self.location));
        }
        if self.latitude {
            out.push(FunctionalStat::Latitude(self.location));
        }
        Ok(out)
    }
}

fn stat_name(stat: &FunctionalStat) -> &'static str {
    match stat {
        FunctionalStat::Risk => "risk",
        FunctionalStat::Area(_) => "area",
        FunctionalStat::Longitude(_) => "longitude",
        FunctionalStat::Latitude(_) => "latitude",
    }
}

fn default_threshold() -> ThresholdSpec {
    ThresholdSpec::Quantile(0.95)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub input: InputSpec,
    pub risk: Vec<RiskFunctional>,
    /// Quantiles resolve against each risk series; the resolved `u` also
    /// thresholds the pointwise field values for area and location.
    #[serde(default = "default_threshold")]
    pub threshold: ThresholdSpec,
    pub max_cluster_size: usize,
    pub pattern_lengths: Vec<usize>,
    pub pattern_scope: PatternScope,
    pub stats: StatSelection,
    /// `None` skips the bootstrap.
    pub bootstrap: Option<BootstrapConfig>,
    pub output: PathBuf,
    /// CSV mirror; defaults to the JSON path with a `.csv` extension.
    pub csv_output: Option<PathBuf>,
    /// Seeds the bootstrap multipliers.
    pub rng_seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            input: InputSpec::default(),
            risk: vec![RiskFunctional::Mean],
            threshold: default_threshold(),
            max_cluster_size: DEFAULT_MAX_CLUSTER_SIZE,
            pattern_lengths: vec![2, 3],
            pattern_scope: PatternScope::AtLeast,
            stats: StatSelection::default(),
            bootstrap: Some(BootstrapConfig::default()),
            output: PathBuf::from("report.json"),
            csv_output: None,
            rng_seed: 0,
        }
    }
}

impl AnalysisConfig {
    /// Check ranges and push the top-level seed into the bootstrap config.
    pub fn normalize(&mut self) -> Result<()> {
        if self.risk.is_empty() {
            return Err(Error::invalid("at least one risk functional is required"));
        }
        for r in &self.risk {
            if let RiskFunctional::Quantile(p) = r {
                RiskFunctional::quantile(*p)?;
            }
        }
        if self.max_cluster_size == 0 {
            return Err(Error::invalid("max cluster size must be >= 1"));
        }
        if let Some(&len) = self.pattern_lengths.iter().find(|l| !(2..=MAX_PATTERN_LENGTH).contains(*l)) {
            return Err(Error::invalid(format!("pattern length {len} outside 2..={MAX_PATTERN_LENGTH}")));
        }
        self.pattern_lengths.sort_unstable();
        self.pattern_lengths.dedup();
        let max_window = self.pattern_lengths.last().copied().unwrap_or(1).max(1);
        if let Some(b) = &mut self.bootstrap {
            b.rng_seed = self.rng_seed;
            b.validate(max_window)?;
        }
        Ok(())
    }

    pub fn csv_path(&self) -> PathBuf {
        self.csv_output.clone().unwrap_or_else(|| self.output.with_extension("csv"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub family: String,
    pub label: String,
    pub prob: f64,
    pub count: Option<u64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub risk: String,
    pub u: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_clusters: u64,
    pub n_ties: u64,
    pub n_degenerate_replicates: u64,
    pub runtime_ms: u64,
    #[serde(default)]
    pub n_sites: usize,
    #[serde(default)]
    pub n_times: usize,
    /// Resolved threshold per risk functional, shared by the risk series and
    /// the pointwise exceedance statistics.
    #[serde(default)]
    pub thresholds: Vec<ThresholdReport>,
    /// Clusters skipped because a statistic was undefined inside the window.
    #[serde(default)]
    pub skipped_undefined: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: serde_json::Value,
    pub estimates: Vec<Estimate>,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per estimate; numbers carry 17 significant digits and parse
    /// back to the same `f64` as the JSON report.
    pub fn to_csv(&self) -> String {
        let num = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
        let mut out = String::from("family,label,prob,count,ci_lo,ci_hi,se\n");
        for e in &self.estimates {
            let _ = writeln!(
                out,
                "{},\"{}\",{},{},{},{},{}",
                e.family,
                e.label,
                num(Some(e.prob)),
                e.count.map_or(String::new(), |c| c.to_string()),
                num(e.ci_lo),
                num(e.ci_hi),
                num(e.se)
            );
        }
        out
    }

    pub fn write(&self, json: &Path, csv: Option<&Path>) -> Result<()> {
        if let Some(csv) = csv {
            write_atomic(csv, self.to_csv().as_bytes())?;
        }
        write_atomic(json, self.to_json()?.as_bytes())
    }
}

fn push_distribution(out: &mut Vec<Estimate>, family: &str, dist: &PatternDistribution) {
    for (i, label) in dist.labels.iter().enumerate() {
        out.push(Estimate {
            family: family.to_string(),
            label: label.clone(),
            prob: dist.probs[i],
            count: Some(dist.counts[i]),
            ci_lo: dist.ci_lo.as_ref().map(|v| v[i]),
            ci_hi: dist.ci_hi.as_ref().map(|v| v[i]),
            se: None,
        });
    }
}

/// Statistic series over the times covered by `clusters`; NaN elsewhere and
/// wherever the statistic is undefined.
fn stat_series<T: Scalar>(
    series: &FieldSeries<T>,
    stat: &FunctionalStat,
    clusters: &[ClusterIndex],
    min_len: usize,
    u: f64,
) -> Vec<f64> {
    let mut out = vec![f64::NAN; series.n_times()];
    for c in clusters.iter().filter(|c| c.length >= min_len) {
        for (t, slot) in out.iter_mut().enumerate().skip(c.start).take(c.length.min(MAX_PATTERN_LENGTH)) {
            let field = series.field(t);
            *slot = match stat {
                FunctionalStat::Risk => f64::NAN,
                FunctionalStat::Area(m) => spatial_risk(m, field, u),
                FunctionalStat::Longitude(l) => locate(*l, series.grid(), field, u).map_or(f64::NAN, |p| p.0),
                FunctionalStat::Latitude(l) => locate(*l, series.grid(), field, u).map_or(f64::NAN, |p| p.1),
            };
        }
    }
    out
}

/// Run the estimators on an in-memory series. `config` must be normalised.
pub fn analyze_series<T: Scalar>(series: &FieldSeries<T>, config: &AnalysisConfig) -> Result<(Vec<Estimate>, Diagnostics)> {
    let mut estimates = Vec::new();
    let mut diag = Diagnostics {
        n_sites: series.site_count(),
        n_times: series.n_times(),
        ..Default::default()
    };
    let stats = config.stats.stats()?;
    let scope_suffix = match config.pattern_scope {
        PatternScope::AtLeast => "",
        PatternScope::Exactly => "/exact",
    };
    let mut finish = |family: String, mut dist: PatternDistribution, pattern: bool, diag: &mut Diagnostics| -> Result<()> {
        if let Some(b) = &config.bootstrap {
            let res = attach_bootstrap(&mut dist, series.n_times(), b)?;
            diag.n_degenerate_replicates += res.n_degenerate as u64;
            diag.warnings.extend(res.warnings.into_iter().map(|w| format!("{family}: {w}")));
        }
        if pattern {
            diag.n_ties += dist.tie_count();
            diag.skipped_undefined += dist.skipped_undefined;
        }
        push_distribution(&mut estimates, &family, &dist);
        Ok(())
    };

    for &r in &config.risk {
        let rv = risk_series(series, r);
        let u = config.threshold.resolve(&rv)?;
        diag.thresholds.push(ThresholdReport { risk: r.to_string(), u });
        let clusters = extract_clusters(&rv, u);
        if clusters.is_empty() {
            return Err(Error::NoClusters);
        }
        diag.n_clusters += clusters.len() as u64;
        finish(
            format!("{r}/cluster_size"),
            cluster_size_distribution_from(&clusters, config.max_cluster_size)?,
            false,
            &mut diag,
        )?;

        let min_len = config.pattern_lengths.first().copied().unwrap_or(2);
        let stat_values: Vec<(&'static str, Vec<f64>)> = stats
            .iter()
            .map(|s| (stat_name(s), stat_series(series, s, &clusters, min_len, u)))
            .collect();
        for &len in &config.pattern_lengths {
            let mut targets: Vec<(&str, &[f64])> = vec![("intensity", &rv)];
            targets.extend(stat_values.iter().map(|(n, v)| (*n, v.as_slice())));
            for (name, values) in targets {
                let family = format!("{r}/{name}/l{len}{scope_suffix}");
                match pattern_distribution_from(values, &clusters, len, config.pattern_scope) {
                    Ok(dist) => finish(family, dist, true, &mut diag)?,
                    Err(Error::NoQualifyingClusters(_)) => {
                        diag.warnings.push(format!("{family}: no qualifying clusters, family omitted"));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok((estimates, diag))
}

/// Read a JSON config; absent keys take their defaults.
pub fn load_config<C: serde::de::DeserializeOwned>(path: &Path) -> Result<C> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// `analyze`: load, estimate, write JSON and CSV reports.
pub fn run_analyze(mut config: AnalysisConfig) -> Result<Report> {
    let start = Instant::now();
    config.normalize()?;
    let series = config.input.load()?;
    let (estimates, mut diagnostics) = analyze_series(&series, &config)?;
    diagnostics.runtime_ms = elapsed_ms(start);
    let report = Report {
        command: "analyze".into(),
        config: serde_json::to_value(&config)?,
        estimates,
        diagnostics,
    };
    report.write(&config.output, Some(&config.csv_path()))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub grid: GridSpec,
    pub n_times: usize,
    pub variogram: VariogramSpec,
    pub subgrid_stride: usize,
    pub temporal_truncation: usize,
    pub output: PathBuf,
    pub format: Option<DataFormat>,
    pub report: Option<PathBuf>,
    pub rng_seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            n_times: 1000,
            variogram: VariogramSpec::default(),
            subgrid_stride: 2,
            temporal_truncation: 18,
            output: PathBuf::from("simulation.stxf"),
            format: None,
            report: None,
            rng_seed: 0,
        }
    }
}

/// `simulate`: Brown–Resnick fields on a regular grid, written as `f32`.
pub fn run_simulate(config: SimulateConfig) -> Result<Report> {
    let start = Instant::now();
    let grid = config.grid.build()?;
    let sim = SimConfig {
        grid,
        n_times: config.n_times,
        subgrid_stride: config.subgrid_stride,
        temporal_truncation: config.temporal_truncation,
        rng_seed: config.rng_seed,
    };
    let series = simulate(&config.variogram, &sim)?;
    save_series(&config.output, config.format, &series)?;
    let report = Report {
        command: "simulate".into(),
        config: serde_json::to_value(&config)?,
        estimates: Vec::new(),
        diagnostics: Diagnostics {
            n_sites: series.site_count(),
            n_times: series.n_times(),
            runtime_ms: elapsed_ms(start),
            ..Default::default()
        },
    };
    if let Some(path) = &config.report {
        report.write(path, None)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetrendConfig {
    pub input: InputSpec,
    pub regression: RegressionConfig,
    pub output: PathBuf,
    pub output_format: Option<DataFormat>,
    pub coefficients: PathBuf,
    pub report: Option<PathBuf>,
}

impl Default for DetrendConfig {
    fn default() -> Self {
        Self {
            input: InputSpec::default(),
            regression: RegressionConfig::default(),
            output: PathBuf::from("anomalies.stxf"),
            output_format: None,
            coefficients: PathBuf::from("coefficients.csv"),
            report: None,
        }
    }
}

/// `detrend`: anomalies plus the per-site coefficient table.
pub fn run_detrend(config: DetrendConfig) -> Result<Report> {
    let start = Instant::now();
    let raw = config.input.load()?;
    let out = detrend(&raw, &config.regression)?;
    write_atomic(&config.coefficients, coefficients_csv(&out.coefficients).as_bytes())?;
    save_series(&config.output, config.output_format, &out.anomalies)?;
    let report = Report {
        command: "detrend".into(),
        config: serde_json::to_value(&config)?,
        estimates: Vec::new(),
        diagnostics: Diagnostics {
            n_sites: raw.site_count(),
            n_times: raw.n_times(),
            runtime_ms: elapsed_ms(start),
            ..Default::default()
        },
    };
    if let Some(path) = &config.report {
        report.write(path, None)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleCommandConfig {
    pub grid: GridSpec,
    pub oracle: OracleConfig,
    pub risk: Vec<RiskFunctional>,
    pub max_cluster_size: usize,
    pub pattern_lengths: Vec<usize>,
    pub pattern_scope: PatternScope,
    pub stats: StatSelection,
    /// Also report the quadrature versions of the cluster-size and intensity families.
    pub cross_check: bool,
    pub output: PathBuf,
    pub csv_output: Option<PathBuf>,
    pub rng_seed: u64,
}

impl Default for OracleCommandConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            oracle: OracleConfig::default(),
            risk: vec![RiskFunctional::Mean],
            max_cluster_size: 3,
            pattern_lengths: vec![2],
            pattern_scope: PatternScope::AtLeast,
            stats: StatSelection::default(),
            cross_check: false,
            output: PathBuf::from("oracle.json"),
            csv_output: None,
            rng_seed: 0,
        }
    }
}

impl OracleCommandConfig {
    pub fn families(&self) -> Result<Vec<OracleFamily>> {
        let scope = self.pattern_scope;
        let mut fams = vec![OracleFamily::ClusterSize {
            max_size: self.max_cluster_size,
        }];
        if self.cross_check {
            fams.push(OracleFamily::ClusterSizeQuadrature {
                max_size: self.max_cluster_size,
            });
        }
        let stats = self.stats.stats()?;
        for &len in &self.pattern_lengths {
            fams.push(OracleFamily::PatternIntensity { len, scope });
            if self.cross_check {
                fams.push(OracleFamily::PatternIntensityQuadrature { len, scope });
            }
            for stat in &stats {
                fams.push(OracleFamily::PatternFunctional {
                    len,
                    scope,
                    stat: stat.clone(),
                });
            }
        }
        Ok(fams)
    }
}

/// `oracle`: Monte Carlo limits with standard errors.
pub fn run_oracle_command(mut config: OracleCommandConfig) -> Result<Report> {
    let start = Instant::now();
    config.oracle.rng_seed = config.rng_seed;
    config.oracle.validate()?;
    if config.risk.is_empty() {
        return Err(Error::invalid("at least one risk functional is required"));
    }
    let grid = config.grid.build()?;
    let families = config.families()?;
    let window = families.iter().map(OracleFamily::required_window).max().unwrap_or(1);
    let source = config.oracle.source(grid, window)?;
    let mut estimates = Vec::new();
    for &r in &config.risk {
        let dists = run_oracle(
            &source,
            &families,
            r,
            config.oracle.draws,
            config.oracle.quadrature_points,
            config.oracle.rng_seed,
        )?;
        for d in dists {
            for v in d.values {
                estimates.push(Estimate {
                    family: format!("{r}/{}", d.family),
                    label: v.label,
                    prob: v.prob,
                    count: None,
                    ci_lo: None,
                    ci_hi: None,
                    se: Some(v.se),
                });
            }
        }
    }
    let csv = config.csv_output.clone().unwrap_or_else(|| config.output.with_extension("csv"));
    let report = Report {
        command: "oracle".into(),
        config: serde_json::to_value(&config)?,
        estimates,
        diagnostics: Diagnostics {
            n_sites: config.grid.nx * config.grid.ny,
            runtime_ms: elapsed_ms(start),
            ..Default::default()
        },
    };
    report.write(&config.output, Some(&csv))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(rv: &[f64]) -> FieldSeries<f64> {
        // two sites carrying the same value, so every functional returns it
        let grid = Arc::new(SpatialGrid::regular(2, 1, (0.0, 0.0), 1.0, CoordSystem::PlanarKm).unwrap());
        let values = rv.iter().flat_map(|&v| [v, v]).collect();
        FieldSeries::new(grid, rv.len(), values).unwrap()
    }

    fn config() -> AnalysisConfig {
        let mut c = AnalysisConfig {
            threshold: ThresholdSpec::Absolute(1.0),
            max_cluster_size: 3,
            pattern_lengths: vec![2],
            bootstrap: None,
            ..Default::default()
        };
        c.normalize().unwrap();
        c
    }

    #[test]
    fn hand_worked_series() {
        let rv = [0.0, 2.0, 3.0, 0.0, 5.0, 0.0, 4.0, 2.0, 0.0, 3.0];
        let (est, diag) = analyze_series(&series(&rv), &config()).unwrap();
        assert_eq!(diag.n_clusters, 3);
        let get = |f: &str, l: &str| est.iter().find(|e| e.family == f && e.label == l).unwrap();
        assert_eq!(get("mean/cluster_size", "1").count, Some(1));
        assert_eq!(get("mean/cluster_size", "2").prob, 2.0 / 3.0);
        assert_eq!(get("mean/intensity/l2", "(1,2)").count, Some(1));
        assert_eq!(get("mean/intensity/l2", "(2,1)").count, Some(1));
        // both sites exceed at every cluster time, so areas tie
        assert_eq!(get("mean/area/l2", "ties").prob, 1.0);
        assert_eq!(diag.n_ties, 2 + 2 + 2);
        assert_eq!(diag.thresholds[0].u, 1.0);
    }

    #[test]
    fn threshold_above_max_has_no_clusters() {
        let mut c = config();
        c.threshold = ThresholdSpec::Absolute(100.0);
        let err = analyze_series(&series(&[0.0, 2.0, 0.0]), &c).unwrap_err();
        assert!(matches!(err, Error::NoClusters));
        assert_eq!(err.exit_code(), 20);
    }

    #[test]
    fn csv_mirrors_json_numbers() {
        let rv = [0.0, 2.0, 3.0, 0.0, 5.0, 0.0, 4.0, 2.0, 0.0, 3.0];
        let (estimates, diagnostics) = analyze_series(&series(&rv), &config()).unwrap();
        let report = Report {
            command: "analyze".into(),
            config: serde_json::Value::Null,
            estimates,
            diagnostics,
        };
        let back: Report = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        let csv = report.to_csv();
        for (line, e) in csv.lines().skip(1).zip(&back.estimates) {
            let after_label = line.rsplit_once('"').unwrap().1;
            let prob: f64 = after_label.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(prob.to_bits(), e.prob.to_bits());
        }
        assert_eq!(back, report);
    }

    #[test]
    fn config_validation() {
        let mut c = AnalysisConfig { pattern_lengths: vec![6], ..Default::default() };
        assert!(c.normalize().is_err());
        let mut c = AnalysisConfig { risk: vec![], ..Default::default() };
        assert!(c.normalize().is_err());
        let mut c = AnalysisConfig { rng_seed: 9, pattern_lengths: vec![3, 2, 3], ..Default::default() };
        c.normalize().unwrap();
        assert_eq!(c.pattern_lengths, vec![2, 3]);
        assert_eq!(c.bootstrap.unwrap().rng_seed, 9);
        let parsed: AnalysisConfig = serde_json::from_str(r#"{"risk": ["max", {"quantile": 0.9}], "bootstrap": null}"#).unwrap();
        assert_eq!(parsed.risk, vec![RiskFunctional::Max, RiskFunctional::Quantile(0.9)]);
        assert!(parsed.bootstrap.is_none());
        assert_eq!(parsed.threshold, ThresholdSpec::Quantile(0.95));
    }
}
