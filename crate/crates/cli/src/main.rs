use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stpat_core::bootstrap::BootstrapConfig;
use stpat_core::pipeline::{
    load_config, run_analyze, run_detrend, run_oracle_command, run_simulate, AnalysisConfig, DetrendConfig,
    OracleCommandConfig, Report, SimulateConfig,
};
use stpat_core::{Error, Result, RiskFunctional, ThresholdSpec};

#[derive(Parser)]
#[command(name = "stpat", version, about = "Clusters and ordinal patterns of spatial extremes")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a Brown–Resnick field series.
    Simulate(SimulateArgs),
    /// Remove trend and season; write anomalies and coefficients.
    Detrend(DetrendArgs),
    /// Estimate cluster-size and pattern distributions.
    Analyze(AnalyzeArgs),
    /// Monte Carlo limits of the same distributions.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_times: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DetrendArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    coefficients: Option<PathBuf>,
    /// Pooling radius in km (0 disables pooling).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv_output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    block_length: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Comma-separated: max, min, mean, median, quantile:<p>.
    #[arg(long, value_delimiter = ',')]
    risk: Option<Vec<String>>,
    /// Threshold as a quantile level of the risk series.
    #[arg(long, conflicts_with = "threshold")]
    quantile_level: Option<f64>,
    /// Absolute threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pattern_lengths: Option<Vec<usize>>,
    #[arg(long)]
    no_bootstrap: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv_output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of spectral draws.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    quadrature_points: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    risk: Option<Vec<String>>,
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pattern_lengths: Option<Vec<usize>>,
    /// Also report the quadrature versions of the closed-form families.
    #[arg(long)]
    cross_check: bool,
}

fn base<C: Default + serde::de::DeserializeOwned>(path: &Option<PathBuf>) -> Result<C> {
    path.as_deref().map_or_else(|| Ok(C::default()), load_config)
}

fn parse_risks(list: Vec<String>) -> Result<Vec<RiskFunctional>> {
    list.iter().map(|s| s.trim().parse()).collect()
}

fn simulate(a: SimulateArgs) -> Result<Report> {
    let mut c: SimulateConfig = base(&a.config)?;
    if let Some(v) = a.seed {
        c.rng_seed = v;
    }
    if let Some(v) = a.n_times {
        c.n_times = v;
    }
    if let Some(v) = a.output {
        c.output = v;
    }
    if a.report.is_some() {
        c.report = a.report;
    }
    run_simulate(c)
}

fn detrend(a: DetrendArgs) -> Result<Report> {
    let mut c: DetrendConfig = base(&a.config)?;
    if let Some(v) = a.input {
        c.input.path = v;
    }
    if let Some(v) = a.output {
        c.output = v;
    }
    if let Some(v) = a.coefficients {
        c.coefficients = v;
    }
    if let Some(v) = a.radius {
        c.regression.pooling_radius_km = v;
    }
    if a.report.is_some() {
        c.report = a.report;
    }
    run_detrend(c)
}

fn analyze(a: AnalyzeArgs) -> Result<Report> {
    let mut c: AnalysisConfig = base(&a.config)?;
    if let Some(v) = a.input {
        c.input.path = v;
    }
    if let Some(v) = a.output {
        c.output = v;
    }
    if a.csv_output.is_some() {
        c.csv_output = a.csv_output;
    }
    if let Some(v) = a.seed {
        c.rng_seed = v;
    }
    if let Some(v) = a.risk {
        c.risk = parse_risks(v)?;
    }
    if let Some(q) = a.quantile_level {
        c.threshold = ThresholdSpec::quantile(q)?;
    }
    if let Some(u) = a.threshold {
        c.threshold = ThresholdSpec::absolute(u)?;
    }
    if let Some(v) = a.lmax {
        c.max_cluster_size = v;
    }
    if let Some(v) = a.pattern_lengths {
        c.pattern_lengths = v;
    }
    if a.no_bootstrap {
        c.bootstrap = None;
    } else if a.block_length.is_some() || a.replicates.is_some() {
        let b = c.bootstrap.get_or_insert_with(BootstrapConfig::default);
        if let Some(v) = a.block_length {
            b.block_length = v;
        }
        if let Some(v) = a.replicates {
            b.replicates = v;
        }
    }
    run_analyze(c)
}

fn oracle(a: OracleArgs) -> Result<Report> {
    let mut c: OracleCommandConfig = base(&a.config)?;
    if let Some(v) = a.output {
        c.output = v;
    }
    if a.csv_output.is_some() {
        c.csv_output = a.csv_output;
    }
    if let Some(v) = a.seed {
        c.rng_seed = v;
    }
    if let Some(v) = a.draws {
        c.oracle.draws = v;
    }
    if let Some(v) = a.quadrature_points {
        c.oracle.quadrature_points = v;
    }
    if let Some(v) = a.risk {
        c.risk = parse_risks(v)?;
    }
    if let Some(v) = a.lmax {
        c.max_cluster_size = v;
    }
    if let Some(v) = a.pattern_lengths {
        c.pattern_lengths = v;
    }
    c.cross_check |= a.cross_check;
    run_oracle_command(c)
}

fn run(cli: Cli) -> Result<Report> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Detrend(a) => detrend(a),
        Command::Analyze(a) => analyze(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            for w in &report.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "{}: {} estimates, {} clusters, {} ms",
                report.command,
                report.estimates.len(),
                report.diagnostics.n_clusters,
                report.diagnostics.runtime_ms
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("stpat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
