//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use kde_coreset::baselines::{grid_snap, random_sample, sample_size, sorted_1d};
use kde_coreset::discrepancy::{halving_coreset, HalvingOptions, HalvingReport};
use kde_coreset::herding::{herd, FirstPoint, HerdingConfig, MeanSubsample, StopRule};
use kde_coreset::kde::{kernel_distance, max_abs_difference};
use kde_coreset::lower_bound::{
    admissible_k_range, certificate_sweep, default_window, drop_bound_certificate, minimal_size,
    steep_bound_certificate, Certificate,
};
use kde_coreset::{Kernel, KernelFamily, Measure, PointSet};
use serde::Serialize;

use crate::bench::{
    candidates_for, run_benchmark, BenchConfig, DataSource, KernelSpec, MethodSpec, StrategyName, DEFAULT_RESTARTS,
};
use crate::io::{read_json, write_json, write_trace, CoresetFile};
use crate::synthetic::Generator;

#[derive(Debug, Parser)]
#[command(name = "kdecoreset", version, about = "Coresets for kernel density estimates")]
pub struct Cli {
    /// Worker threads for data-parallel scans (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel herding.
    Herd(HerdArgs),
    /// Halving by low-discrepancy colorings (Gaussian kernel).
    Halve(HalveArgs),
    /// Uniform random sample.
    Sample(SampleArgs),
    /// Evenly spaced points in sorted order (one dimension).
    Sorted1d(Sorted1dArgs),
    /// Snap points to a lattice and merge duplicates.
    Gridsnap(GridsnapArgs),
    /// Certificates on the lower-bound construction.
    Lowerbound(LowerboundArgs),
    /// Measure a coreset against its point set.
    Evaluate(EvaluateArgs),
    /// Compare several constructions on one point set.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV/TSV file with one point per row.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    /// Generate points instead of reading them.
    #[arg(long)]
    pub synthetic: Option<Generator>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
}

impl DataArgs {
    fn source(&self, seed: u64) -> DataSource {
        match (&self.input, self.synthetic) {
            (Some(path), _) => DataSource::File { path: path.clone() },
            (None, Some(generator)) => DataSource::Synthetic { generator, n: self.n, d: self.d, seed },
            (None, None) => unreachable!("clap requires one of --input or --synthetic"),
        }
    }

    fn load(&self, seed: u64) -> Result<PointSet> {
        Ok(self.source(seed).load()?)
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// gaussian, laplace, triangle, ball or epanechnikov.
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
}

impl KernelArgs {
    fn spec(&self) -> KernelSpec {
        KernelSpec { family: self.kernel.clone(), bandwidth: self.bandwidth }
    }

    fn kernel(&self) -> Result<Kernel> {
        Ok(self.spec().to_kernel()?)
    }
}

#[derive(Debug, Args)]
pub struct HerdArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
    pub steps: Option<usize>,
    /// Run ⌈2/ε²⌉ steps.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Start from index 0 instead of the densest point.
    #[arg(long)]
    pub first_zero: bool,
    /// Estimate the mean embedding from a subsample when n exceeds 20 000
    /// (voids the certificate).
    #[arg(long)]
    pub subsample: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV with columns t, chosen_index, gap_sq.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HalveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub epsilon: f64,
    /// alt1d or heuristic.
    #[arg(long, default_value = "heuristic")]
    pub strategy: StrategyName,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid points per axis for the kernel discrepancy centers.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
    pub m: Option<usize>,
    /// Size the sample as ⌈(d + ln(1/δ))/ε²⌉.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Sorted1dArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridsnapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub n: usize,
    /// Window centre (default depends on the kernel).
    #[arg(long)]
    pub zf: Option<f64>,
    /// Window half-width (default zf/2).
    #[arg(long)]
    pub rf: Option<f64>,
    #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep")]
    pub k: Option<usize>,
    /// Every admissible k.
    #[arg(long)]
    pub sweep: bool,
    /// Also report the smallest certified size reaching this error.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Coreset JSON as written by the other subcommands.
    #[arg(long)]
    pub coreset: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON config; replaces the data, kernel and method flags.
    #[arg(long, conflicts_with_all = ["input", "synthetic", "method"])]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub synthetic: Option<Generator>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Repeatable, e.g. `--method herd:epsilon=0.1 --method sample:m=200`.
    #[arg(long)]
    pub method: Vec<MethodSpec>,
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn emit<T: Serialize>(output: Option<&Path>, value: &T) -> Result<()> {
    match output {
        Some(path) => write_json(path, value)?,
        None => {
            let text = serde_json::to_string_pretty(value)?;
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}").and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn herd_cmd(args: &HerdArgs) -> Result<()> {
    let points = args.data.load(args.seed)?;
    let kernel = args.kernel.kernel()?;
    let stop = match (args.steps, args.epsilon) {
        (Some(t), _) => StopRule::Steps(t),
        (None, Some(e)) => StopRule::Epsilon(e),
        (None, None) => unreachable!("clap requires --steps or --epsilon"),
    };
    let config = HerdingConfig {
        first_point: if args.first_zero { FirstPoint::Zero } else { FirstPoint::Densest },
        mean_subsample: args.subsample.then(|| MeanSubsample { seed: args.seed, ..MeanSubsample::default() }),
    };
    let out = herd(&points, &kernel, stop, &config)?;
    if let Some(path) = &args.trace {
        write_trace(path, &out.trace)?;
    }
    let gap = out.trace.final_gap_sq().unwrap_or(0.0).sqrt();
    eprintln!(
        "herd: {} steps, {} distinct points, gap {gap:.6}{}",
        out.steps(),
        out.distinct_count(),
        if out.certified { format!(" (certified <= {:.6})", out.certified_bound()) } else { String::new() }
    );
    emit(args.output.as_deref(), &CoresetFile::from_coreset(&points, &out.coreset))
}

#[derive(Serialize)]
struct LevelJson {
    input_size: usize,
    discrepancy: f64,
    retained_size: usize,
    kernel_discrepancy: f64,
    rectangle_discrepancy: Option<u64>,
    error_bound: f64,
    certified: bool,
}

#[derive(Serialize)]
struct HalvingJson {
    levels: Vec<LevelJson>,
    total_bound: f64,
    certified: bool,
}

impl From<&HalvingReport> for HalvingJson {
    fn from(r: &HalvingReport) -> Self {
        Self {
            levels: r
                .levels
                .iter()
                .map(|l| LevelJson {
                    input_size: l.input_size,
                    discrepancy: l.discrepancy,
                    retained_size: l.retained_size,
                    kernel_discrepancy: l.kernel_discrepancy,
                    rectangle_discrepancy: l.rectangle_discrepancy,
                    error_bound: l.error_bound,
                    certified: l.certified,
                })
                .collect(),
            total_bound: r.total_bound,
            certified: r.certified,
        }
    }
}

fn halve_cmd(args: &HalveArgs) -> Result<()> {
    let points = args.data.load(args.seed)?;
    let kernel = args.kernel.kernel()?;
    let strategy = args.strategy.strategy(args.restarts, args.seed);
    let options = HalvingOptions { grid_resolution: args.grid };
    let (coreset, report) = halving_coreset(&points, &kernel, args.epsilon, &strategy, &options)?;
    eprintln!(
        "halve: {} levels, {} points, bound {:.6}{}",
        report.levels.len(),
        coreset.len(),
        report.total_bound,
        if report.certified { "" } else { " (not certified)" }
    );
    if let Some(path) = &args.report {
        write_json(path, &HalvingJson::from(&report))?;
    }
    emit(args.output.as_deref(), &CoresetFile::from_coreset(&points, &coreset))
}

fn sample_cmd(args: &SampleArgs) -> Result<()> {
    let points = args.data.load(args.seed)?;
    let m = match (args.m, args.epsilon) {
        (Some(m), _) => m,
        (None, Some(e)) => sample_size(e, points.dim(), args.delta)?.min(points.len()),
        (None, None) => unreachable!("clap requires --m or --epsilon"),
    };
    let coreset = random_sample(&points, m, args.seed)?;
    emit(args.output.as_deref(), &CoresetFile::from_coreset(&points, &coreset))
}

fn sorted1d_cmd(args: &Sorted1dArgs) -> Result<()> {
    let points = args.data.load(args.seed)?;
    let coreset = sorted_1d(&points, args.m)?;
    emit(args.output.as_deref(), &CoresetFile::from_coreset(&points, &coreset))
}

fn gridsnap_cmd(args: &GridsnapArgs) -> Result<()> {
    let points = args.data.load(args.seed)?;
    let snap = grid_snap(&points, &args.kernel.kernel()?, args.epsilon)?;
    eprintln!("gridsnap: {} cells of width {}", snap.snapped.len(), snap.cell_width);
    emit(args.output.as_deref(), &CoresetFile::from_weighted(&points, &snap.snapped))
}

#[derive(Serialize)]
struct CertificateJson {
    k: usize,
    l1: f64,
    l2: f64,
    gap: f64,
    rhs: f64,
    holds: bool,
}

impl From<&Certificate> for CertificateJson {
    fn from(c: &Certificate) -> Self {
        Self { k: c.k, l1: c.l1, l2: c.l2, gap: c.lhs, rhs: c.rhs, holds: c.holds }
    }
}

#[derive(Serialize)]
struct MinimalSizeJson {
    epsilon: f64,
    k: Option<usize>,
    gap: Option<f64>,
    threshold: Option<f64>,
}

#[derive(Serialize)]
struct LowerBoundJson {
    kernel: KernelSpec,
    n: usize,
    z_f: f64,
    r_f: f64,
    c_f: f64,
    k_min: usize,
    k_max: usize,
    all_hold: bool,
    rows: Vec<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    minimal_size: Option<MinimalSizeJson>,
}

fn lowerbound_cmd(args: &LowerboundArgs) -> Result<()> {
    let kernel = args.kernel.kernel()?;
    let (default_z, _) = default_window(&kernel);
    let z_f = args.zf.unwrap_or(default_z);
    let r_f = args.rf.unwrap_or(z_f / 2.0);
    let ball = kernel.family() == KernelFamily::Ball;
    let c_f = if ball { kernel.drop_constant(z_f, r_f)?.c_f } else { kernel.steepness_constant(z_f, r_f)?.c_f };
    let range = admissible_k_range(args.n, z_f, r_f)?;
    let rows: Vec<Certificate> = match args.k {
        Some(k) if ball => vec![drop_bound_certificate(args.n, k, z_f, r_f, &kernel)?],
        Some(k) => vec![steep_bound_certificate(args.n, k, z_f, r_f, &kernel)?],
        None => certificate_sweep(args.n, z_f, r_f, &kernel)?,
    };
    let minimal = match args.epsilon {
        Some(epsilon) => {
            let m = minimal_size(args.n, z_f, r_f, &kernel, epsilon)?;
            Some(MinimalSizeJson {
                epsilon,
                k: m.map(|m| m.k),
                gap: m.map(|m| m.gap),
                threshold: m.map(|m| m.threshold),
            })
        }
        None => None,
    };
    let all_hold = rows.iter().all(|c| c.holds);
    eprintln!("lowerbound: {} certificates, all hold: {all_hold}", rows.len());
    let report = LowerBoundJson {
        kernel: args.kernel.spec(),
        n: args.n,
        z_f,
        r_f,
        c_f,
        k_min: range.k_min,
        k_max: range.k_max,
        all_hold,
        rows: rows.iter().map(CertificateJson::from).collect(),
        minimal_size: minimal,
    };
    emit(args.output.as_deref(), &report)
}

#[derive(Serialize)]
struct ErrorReportJson {
    sup_error_estimate: f64,
    witness_point: Vec<f64>,
    rkhs_gap: Option<f64>,
    candidate_count: usize,
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let points = args.data.load(args.seed)?;
    let kernel = args.kernel.kernel()?;
    let file: CoresetFile = read_json(&args.coreset)?;
    if file.parent_size != points.len() {
        bail!("coreset was built from {} points, input has {}", file.parent_size, points.len());
    }
    let weighted = match file.to_coreset(&points) {
        Some(coreset) => {
            let coreset = coreset?;
            let w = (0..coreset.len()).map(|k| coreset.weight(k)).collect();
            kde_coreset::WeightedPoints::new(points.select(coreset.indices())?, w)?
        }
        None => file.to_weighted()?,
    };
    let candidates = candidates_for(&points, &kernel, args.grid);
    let (sup, witness) = max_abs_difference(&points, &weighted, &kernel, &candidates)?;
    let report = ErrorReportJson {
        sup_error_estimate: sup,
        witness_point: candidates.point(witness).to_vec(),
        rkhs_gap: kernel_distance(&points, &weighted as &dyn Measure, &kernel).ok(),
        candidate_count: candidates.len(),
    };
    emit(args.output.as_deref(), &report)
}

fn bench_cmd(args: &BenchArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => read_json::<BenchConfig>(path)?,
        None => {
            let data = match (&args.input, args.synthetic) {
                (Some(path), _) => DataSource::File { path: path.clone() },
                (None, Some(generator)) => DataSource::Synthetic { generator, n: args.n, d: args.d, seed: args.seed },
                (None, None) => bail!("bench needs --config, --input or --synthetic"),
            };
            BenchConfig {
                data,
                kernel: args.kernel.spec(),
                methods: args.method.clone(),
                grid_resolution: args.grid,
                seed: args.seed,
            }
        }
    };
    let report = run_benchmark(&config)?;
    let skipped = report.rows.iter().filter(|r| r.skipped_reason.is_some()).count();
    eprintln!("bench: {} rows ({skipped} skipped)", report.rows.len());
    emit(args.output.as_deref(), &report)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Herd(a) => herd_cmd(a),
        Command::Halve(a) => halve_cmd(a),
        Command::Sample(a) => sample_cmd(a),
        Command::Sorted1d(a) => sorted1d_cmd(a),
        Command::Gridsnap(a) => gridsnap_cmd(a),
        Command::Lowerbound(a) => lowerbound_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    }
}
