//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so every line is printed; exits nonzero if any binding criterion fails.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stpat_core::bootstrap::{block_counts, bootstrap_ci, bootstrap_ci_with_multipliers, BootstrapConfig};
use stpat_core::cluster::{
    cluster_size_distribution_from, extract_clusters, pattern_distribution_from, risk_series, PatternDistribution,
    PatternScope,
};
use stpat_core::detrend::{cyclic_spline_basis, detrend, RegressionConfig};
use stpat_core::field::empirical_quantile;
use stpat_core::io::write_binary;
use stpat_core::oracle::{run_oracle, OracleConfig, OracleDistribution, OracleFamily};
use stpat_core::risk::apply_risk;
use stpat_core::simulate::{madogram_extremal_coefficient, simulate, SimConfig, VariogramSpec};
use stpat_core::{CoordSystem, FieldSeries, RiskFunctional, SpatialGrid};

/// Seeds fixed before any acceptance run.
const SIM_SEED: u64 = 1;
const ORACLE_SEED: u64 = 20_261_015;
const BOOT_SEED: u64 = 0;

struct Outcome {
    pass: bool,
    binding: bool,
    detail: String,
}

fn pass_if(pass: bool, detail: String) -> Outcome {
    Outcome { pass, binding: true, detail }
}

fn desk_grid() -> Arc<SpatialGrid> {
    Arc::new(SpatialGrid::regular(7, 7, (40.0, 16.5), 0.25, CoordSystem::LonLat).unwrap())
}

fn sim(n_times: usize, seed: u64) -> FieldSeries<f64> {
    simulate(&VariogramSpec::default(), &SimConfig::new(desk_grid(), n_times, seed)).unwrap()
}

/// Cluster sizes 1..3 and ℓ = 2 intensity patterns of the spatial mean at the 95% quantile.
fn estimate(series: &FieldSeries<f64>, boot_seed: u64) -> (PatternDistribution, PatternDistribution) {
    let rv = risk_series(series, RiskFunctional::Mean);
    let u = empirical_quantile(&rv, 0.95).unwrap();
    let clusters = extract_clusters(&rv, u);
    let mut sizes = cluster_size_distribution_from(&clusters, 3).unwrap();
    let mut patterns = pattern_distribution_from(&rv, &clusters, 2, PatternScope::AtLeast).unwrap();
    let cfg = BootstrapConfig { rng_seed: boot_seed, ..Default::default() };
    stpat_core::bootstrap::attach_bootstrap(&mut sizes, series.n_times(), &cfg).unwrap();
    stpat_core::bootstrap::attach_bootstrap(&mut patterns, series.n_times(), &cfg).unwrap();
    (sizes, patterns)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let all = [
        RiskFunctional::Max,
        RiskFunctional::Min,
        RiskFunctional::Mean,
        RiskFunctional::Median,
        RiskFunctional::Quantile(0.9),
    ];
    let mut worst_rel = 0.0f64;
    let mut commute_failures = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let f: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 10.0).collect();
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled: Vec<f64> = f.iter().map(|x| c * x).collect();
        let cubed: Vec<f64> = f.iter().map(|x| x * x * x).collect();
        for r in all {
            let base = apply_risk(r, &f);
            let rel = (apply_risk(r, &scaled) - c * base).abs() / (c * base).abs().max(f64::MIN_POSITIVE);
            worst_rel = worst_rel.max(if base == 0.0 { 0.0 } else { rel });
            if r.is_order_based() && apply_risk(r, &cubed) != base * base * base {
                commute_failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass_if(
        worst_rel <= 1e-12 && commute_failures == 0 && secs < 5.0,
        format!("max rel homogeneity error {worst_rel:.2e}, {commute_failures} commutation failures, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let cfg = OracleConfig { draws: 100_000, quadrature_points: 200, rng_seed: ORACLE_SEED, ..Default::default() };
    let source = cfg.source(desk_grid(), 3).unwrap();
    let scope = PatternScope::AtLeast;
    let fams = [
        OracleFamily::ClusterSize { max_size: 3 },
        OracleFamily::ClusterSizeQuadrature { max_size: 3 },
        OracleFamily::PatternIntensity { len: 2, scope },
        OracleFamily::PatternIntensityQuadrature { len: 2, scope },
    ];
    let d = run_oracle(&source, &fams, RiskFunctional::Mean, cfg.draws, cfg.quadrature_points, cfg.rng_seed).unwrap();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut checks = 0;
    for (closed, quad, labels) in [(&d[0], &d[1], vec!["1", "2", "3"]), (&d[2], &d[3], vec!["(1,2)", "(2,1)"])] {
        for l in labels {
            let (a, b) = (closed.get(l).unwrap(), quad.get(l).unwrap());
            let tol = (3.0 * a.se.max(b.se)).max(0.01);
            worst = worst.max((a.raw - b.raw).abs() / tol);
            ok &= (a.raw - b.raw).abs() <= tol;
            checks += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass_if(
        ok && checks == 5 && secs < 300.0,
        format!("{checks} targets, worst |closed − quadrature| / tol = {worst:.3}, {secs:.1} s"),
    )
}

fn oracle_targets() -> (OracleDistribution, OracleDistribution) {
    let cfg = OracleConfig { draws: 500_000, rng_seed: ORACLE_SEED, ..Default::default() };
    let source = cfg.source(desk_grid(), 3).unwrap();
    let fams = [
        OracleFamily::ClusterSize { max_size: 3 },
        OracleFamily::PatternIntensity { len: 2, scope: PatternScope::AtLeast },
    ];
    let mut d = run_oracle(&source, &fams, RiskFunctional::Mean, cfg.draws, cfg.quadrature_points, cfg.rng_seed)
        .unwrap()
        .into_iter();
    (d.next().unwrap(), d.next().unwrap())
}

fn criterion_3_and_9() -> (Outcome, Outcome) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| {
        let start = Instant::now();
        let series = sim(20_000, SIM_SEED);
        let (sizes, patterns) = estimate(&series, BOOT_SEED);
        let (o_sizes, o_patterns) = oracle_targets();
        let secs = start.elapsed().as_secs_f64();

        let mut within = true;
        let mut covered = 0;
        let mut parts = Vec::new();
        let targets = [
            (&sizes, &o_sizes, "1", 0.05),
            (&sizes, &o_sizes, "2", 0.05),
            (&sizes, &o_sizes, "3", 0.05),
            (&patterns, &o_patterns, "(1,2)", 0.06),
            (&patterns, &o_patterns, "(2,1)", 0.06),
        ];
        for (est, oracle, label, tol) in targets {
            let i = est.labels.iter().position(|l| l == label).unwrap();
            let p = est.probs[i];
            let o = oracle.get(label).unwrap().raw;
            let (lo, hi) = (est.ci_lo.as_ref().unwrap()[i], est.ci_hi.as_ref().unwrap()[i]);
            within &= (p - o).abs() <= tol;
            if lo <= o && o <= hi {
                covered += 1;
            }
            parts.push(format!("{label}: {p:.3} vs {o:.3} [{lo:.3}, {hi:.3}]"));
        }
        let c3 = pass_if(
            within && covered >= 4 && secs < 900.0,
            format!("{}; oracle in CI {covered}/5; {secs:.1} s", parts.join("; ")),
        );
        let p1 = sizes.prob_of("1").unwrap();
        let p12 = patterns.prob_of("(1,2)").unwrap();
        let in_corridor = (0.25..=0.55).contains(&p1) && (0.5..=0.8).contains(&p12);
        let c9 = Outcome {
            pass: in_corridor,
            binding: false,
            detail: format!("P(C=1) = {p1:.3} (corridor [0.25, 0.55]), P((1,2)) = {p12:.3} (corridor [0.5, 0.8])"),
        };
        (c3, c9)
    })
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let n_times = 20_000;
    let grid = desk_grid();
    let values: Vec<f64> = (0..n_times * grid.site_count())
        .map(|_| -1.0 / rng.random::<f64>().ln())
        .collect();
    let series = FieldSeries::new(grid, n_times, values).unwrap();
    let rv = risk_series(&series, RiskFunctional::Mean);
    let u = empirical_quantile(&rv, 0.95).unwrap();
    let clusters = extract_clusters(&rv, u);
    let sizes = cluster_size_distribution_from(&clusters, 12).unwrap();
    let p1 = sizes.prob_of("1").unwrap();
    let patterns = pattern_distribution_from(&rv, &clusters, 2, PatternScope::AtLeast).unwrap();
    // denominators recounted directly from the exceedance indicators
    let above: Vec<bool> = rv.iter().map(|&v| v > u).collect();
    let mut starts_ge2 = 0;
    let mut starts = 0;
    for t in 1..n_times - 1 {
        if !above[t - 1] && above[t] {
            let mut e = t;
            while e < n_times && above[e] {
                e += 1;
            }
            if e < n_times {
                starts += 1;
                if e - t >= 2 {
                    starts_ge2 += 1;
                }
            }
        }
    }
    let norm = (patterns.probs.iter().sum::<f64>() - 1.0).abs();
    let size_norm = (sizes.probs.iter().sum::<f64>() - 1.0).abs();
    pass_if(
        p1 >= 0.90
            && patterns.denominator_count == starts_ge2
            && sizes.denominator_count == starts
            && norm < 1e-12
            && size_norm < 1e-12,
        format!(
            "P(C=1) = {p1:.4}; denominators {} / {starts} clusters, {} / {starts_ge2} of size >= 2; normalisation error {:.1e}",
            sizes.denominator_count,
            patterns.denominator_count,
            norm.max(size_norm)
        ),
    )
}

fn criterion_5() -> Outcome {
    let spec = VariogramSpec::default();
    let series = sim(12_000, SIM_SEED + 4);
    let n = series.n_times() as f64;
    let target = (-1.0f64).exp();
    let mut worst = 0.0f64;
    for s in 0..series.site_count() {
        let below = series.site_series(s).iter().filter(|&&z| z <= 1.0).count() as f64 / n;
        worst = worst.max((below - target).abs());
    }
    let (a, b) = (24, 25);
    let grid = series.grid();
    let h = (grid.coord(b).0 - grid.coord(a).0, grid.coord(b).1 - grid.coord(a).1);
    let theta_hat = madogram_extremal_coefficient(&series.site_series(a), &series.site_series(b));
    let theta = spec.extremal_coefficient(h, 0.0);
    pass_if(
        worst <= 0.015 && (theta_hat - theta).abs() <= 0.05,
        format!("max |P(Z<=1) - e^-1| = {worst:.4}; extremal coefficient {theta_hat:.3} vs {theta:.3}"),
    )
}

fn criterion_6() -> Outcome {
    let series = sim(20_000, SIM_SEED);
    let (sizes, _) = estimate(&series, BOOT_SEED);
    let bc = block_counts(&sizes.windows, sizes.labels.len(), series.n_times(), 1000).unwrap();
    let zero = bootstrap_ci_with_multipliers(&bc, &vec![0.0; 1000 * bc.n_blocks()], 0.95).unwrap();
    let num: u64 = bc.numerators.iter().map(|n| n[0]).sum();
    let den: u64 = bc.denominators.iter().sum();
    let blockwise = num as f64 / den as f64;
    let exact = zero.ci_lo[0] == zero.ci_hi[0] && zero.point[0] == blockwise && zero.ci_lo[0] == blockwise;

    let mut narrower = 0;
    for rep in 0..10u64 {
        let width = |n: usize, seed: u64| {
            let s = sim(n, seed);
            let rv = risk_series(&s, RiskFunctional::Mean);
            let u = empirical_quantile(&rv, 0.95).unwrap();
            let d = cluster_size_distribution_from(&extract_clusters(&rv, u), 3).unwrap();
            let bc = block_counts(&d.windows, d.labels.len(), n, 1000).unwrap();
            let res = bootstrap_ci(&bc, &BootstrapConfig { rng_seed: seed, ..Default::default() }).unwrap();
            res.ci_hi[0] - res.ci_lo[0]
        };
        if width(20_000, 1000 + rep) < width(5_000, 2000 + rep) {
            narrower += 1;
        }
    }
    pass_if(
        exact && narrower >= 8,
        format!("xi = 0: width {} and point = blockwise ratio {blockwise:.4}: {exact}; narrower at n = 20000 in {narrower}/10", zero.ci_hi[0] - zero.ci_lo[0]),
    )
}

fn criterion_7() -> Outcome {
    let n_sites = 20;
    let n_times = 3650;
    let grid = Arc::new(SpatialGrid::regular(n_sites, 1, (0.0, 0.0), 10.0, CoordSystem::PlanarKm).unwrap());
    let cfg = RegressionConfig { pooling_radius_km: 20.0, ..Default::default() };
    let k = cfg.n_seasonal_basis;
    let base_season: Vec<f64> = (0..k)
        .map(|j| 5.0 * (2.0 * std::f64::consts::PI * j as f64 / k as f64).cos())
        .collect();
    let truth: Vec<(f64, f64, Vec<f64>)> = (0..n_sites)
        .map(|s| {
            let m = 1.0 + 0.005 * s as f64;
            (15.0 + 0.05 * s as f64, 0.0005 + 1e-5 * s as f64, base_season.iter().map(|b| b * m).collect())
        })
        .collect();
    let basis: Vec<Vec<f64>> = (0..n_times).map(|t| cyclic_spline_basis(&cfg, t as f64)).collect();
    let season = |s: usize, t: usize| -> f64 { basis[t].iter().zip(&truth[s].2).map(|(p, b)| p * b).sum() };
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut resid = vec![0.0; n_times * n_sites];
    let mut values = vec![0.0; n_times * n_sites];
    for t in 0..n_times {
        for s in 0..n_sites {
            let e: f64 = rng.sample(StandardNormal);
            resid[t * n_sites + s] = e;
            values[t * n_sites + s] = truth[s].0 + truth[s].1 * t as f64 + season(s, t) + e;
        }
    }
    let raw = FieldSeries::new(Arc::clone(&grid), n_times, values).unwrap();
    let out = detrend(&raw, &cfg).unwrap();
    let anom = out.anomalies.values();
    let mean_r = resid.iter().sum::<f64>() / resid.len() as f64;
    let sse: f64 = anom.iter().zip(&resid).map(|(a, r)| (a - r) * (a - r)).sum();
    let sst: f64 = resid.iter().map(|r| (r - mean_r) * (r - mean_r)).sum();
    let r2 = 1.0 - sse / sst;

    let mut worst = 0.0f64;
    for s in 0..n_sites {
        let true_curve: Vec<f64> = (0..366).map(|t| season(s, t)).collect();
        let amp = (true_curve.iter().cloned().fold(f64::MIN, f64::max) - true_curve.iter().cloned().fold(f64::MAX, f64::min)) / 2.0;
        for (t, tc) in true_curve.iter().enumerate() {
            let fit = out.coefficients[s].seasonal_at(&cfg, t as f64);
            worst = worst.max((fit - tc).abs() / amp);
        }
    }
    pass_if(
        r2 >= 0.99 && worst <= 0.05,
        format!("R^2 = {r2:.5}; max seasonal error {:.2}% of amplitude", 100.0 * worst),
    )
}

#[cfg(unix)]
fn child_peak_rss_bytes() -> u64 {
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    // SAFETY: getrusage writes into the provided struct.
    unsafe { libc::getrusage(libc::RUSAGE_CHILDREN, &mut usage) };
    usage.ru_maxrss as u64 * 1024
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("large.stxf");
    {
        let grid = Arc::new(SpatialGrid::regular(100, 50, (30.0, 10.0), 0.05, CoordSystem::LonLat).unwrap());
        let n_times = 11_000;
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        let values: Vec<f32> = (0..n_times * grid.site_count())
            .map(|_| (-1.0 / rng.random::<f64>().ln()) as f32)
            .collect();
        write_binary(&path, &FieldSeries::new(grid, n_times, values).unwrap()).unwrap();
    }
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_stpat"))
        .args(["analyze", "--no-bootstrap", "--input"])
        .arg(&path)
        .arg("--output")
        .arg(dir.path().join("large.json"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    let status = out.status;
    let summary = String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or("").to_string();
    let elapsed = start.elapsed();
    let rss = child_peak_rss_bytes();
    let gib = rss as f64 / (1u64 << 30) as f64;
    pass_if(
        status.success() && elapsed < Duration::from_secs(60) && rss < 6 * (1 << 30),
        format!(
            "5000 sites x 11000 times: exit {:?}, {:.1} s, peak RSS {gib:.2} GiB ({} cores available); child: {summary}",
            status.code(),
            elapsed.as_secs_f64(),
            std::thread::available_parallelism().map_or(1, |n| n.get())
        ),
    )
}

fn report(n: u32, o: &Outcome) {
    let tag = match (o.pass, o.binding) {
        (true, _) => "PASS",
        (false, true) => "FAIL",
        (false, false) => "OUTSIDE (reported only)",
    };
    println!("acceptance criterion {n}: {tag} - {}", o.detail);
}

fn main() {
    let mut results = Vec::new();
    let mut record = |n: u32, o: Outcome| {
        report(n, &o);
        results.push((n, o));
    };
    record(1, criterion_1());
    record(2, criterion_2());
    let (c3, c9) = criterion_3_and_9();
    record(3, c3);
    record(4, criterion_4());
    record(5, criterion_5());
    record(6, criterion_6());
    record(7, criterion_7());
    record(8, criterion_8());
    record(9, c9);
    let failed: Vec<u32> = results.iter().filter(|(_, o)| o.binding && !o.pass).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all binding criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
