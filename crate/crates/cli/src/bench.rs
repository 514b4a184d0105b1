//! Benchmark runs: build several coresets of one point set and measure each
//! against the same candidate set.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use kde_coreset::baselines::{grid_snap, random_sample, sample_size, sorted_1d};
use kde_coreset::discrepancy::{halving_coreset, ColoringStrategy, HalvingOptions};
use kde_coreset::herding::{herd, FirstPoint, HerdingConfig, StopRule};
use kde_coreset::kde::{kernel_distance, max_abs_difference, sup_error_candidates};
use kde_coreset::{Kernel, KernelFamily, Measure, PointSet};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{read_points, InputError};
use crate::synthetic::{generate, Generator};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Core(#[from] kde_coreset::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: String,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn to_kernel(&self) -> Result<Kernel, ConfigError> {
        let family = KernelFamily::from_name(&self.family)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown kernel {:?}", self.family)))?;
        Ok(Kernel::new(family, self.bandwidth)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    File { path: PathBuf },
    Synthetic { generator: Generator, n: usize, d: usize, seed: u64 },
}

impl DataSource {
    pub fn load(&self) -> Result<PointSet, ConfigError> {
        match self {
            DataSource::File { path } => Ok(read_points(path)?),
            DataSource::Synthetic { generator, n, d, seed } => Ok(generate(*generator, *n, *d, *seed)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSize {
    Fixed(usize),
    /// `⌈(1/ε²)(d + ln(1/δ))⌉`.
    Bound { epsilon: f64, delta: f64 },
}

/// One construction with its parameters, written `name:key=value,...`
/// (e.g. `herd:epsilon=0.1`, `sample:m=200`, `halve:epsilon=0.05,strategy=alt1d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    Herd { stop: StopRule, first_point: FirstPoint },
    Halve { epsilon: f64, strategy: StrategyName, restarts: usize },
    Sample { size: SampleSize },
    Sorted1d { m: usize },
    GridSnap { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyName {
    Alt1d,
    Heuristic,
}

impl FromStr for StrategyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alt1d" => Ok(StrategyName::Alt1d),
            "heuristic" => Ok(StrategyName::Heuristic),
            other => Err(format!("unknown coloring strategy {other:?} (expected alt1d or heuristic)")),
        }
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyName::Alt1d => "alt1d",
            StrategyName::Heuristic => "heuristic",
        })
    }
}

impl StrategyName {
    pub fn strategy(self, restarts: usize, seed: u64) -> ColoringStrategy {
        match self {
            StrategyName::Alt1d => ColoringStrategy::Alternating1d,
            StrategyName::Heuristic => ColoringStrategy::Heuristic { restarts, seed },
        }
    }
}

/// Default restarts of the heuristic coloring.
pub const DEFAULT_RESTARTS: usize = 16;

fn parse_value<T: FromStr>(method: &str, key: &str, raw: &str) -> Result<T, String> {
    raw.parse().map_err(|_| format!("{method}: bad value {raw:?} for {key}"))
}

impl FromStr for MethodSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for pair in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| format!("{name}: expected key=value, got {pair:?}"))?;
            if params.insert(k.trim(), v.trim()).is_some() {
                return Err(format!("{name}: {k} given twice"));
            }
        }
        let mut take = |key: &str| params.remove(key);
        let spec = match name {
            "herd" => {
                let stop = match (take("steps"), take("epsilon")) {
                    (Some(t), None) => StopRule::Steps(parse_value(name, "steps", t)?),
                    (None, Some(e)) => StopRule::Epsilon(parse_value(name, "epsilon", e)?),
                    _ => return Err("herd: give exactly one of steps or epsilon".into()),
                };
                let first_point = match take("first") {
                    None | Some("densest") => FirstPoint::Densest,
                    Some("zero") => FirstPoint::Zero,
                    Some(other) => return Err(format!("herd: unknown first point rule {other:?}")),
                };
                MethodSpec::Herd { stop, first_point }
            }
            "halve" => {
                let epsilon = parse_value(name, "epsilon", take("epsilon").ok_or("halve: epsilon is required")?)?;
                let strategy = take("strategy").map_or(Ok(StrategyName::Heuristic), str::parse)?;
                let restarts = take("restarts").map_or(Ok(DEFAULT_RESTARTS), |r| parse_value(name, "restarts", r))?;
                MethodSpec::Halve { epsilon, strategy, restarts }
            }
            "sample" => {
                let size = match (take("m"), take("epsilon")) {
                    (Some(m), None) => SampleSize::Fixed(parse_value(name, "m", m)?),
                    (None, Some(e)) => SampleSize::Bound {
                        epsilon: parse_value(name, "epsilon", e)?,
                        delta: take("delta").map_or(Ok(0.1), |d| parse_value(name, "delta", d))?,
                    },
                    _ => return Err("sample: give exactly one of m or epsilon".into()),
                };
                MethodSpec::Sample { size }
            }
            "sorted1d" => MethodSpec::Sorted1d { m: parse_value(name, "m", take("m").ok_or("sorted1d: m is required")?)? },
            "gridsnap" => MethodSpec::GridSnap {
                epsilon: parse_value(name, "epsilon", take("epsilon").ok_or("gridsnap: epsilon is required")?)?,
            },
            other => return Err(format!("unknown method {other:?}")),
        };
        if let Some(extra) = params.keys().next() {
            return Err(format!("{name}: unknown parameter {extra:?}"));
        }
        Ok(spec)
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Herd { stop, first_point } => {
                match stop {
                    StopRule::Steps(t) => write!(f, "herd:steps={t}")?,
                    StopRule::Epsilon(e) => write!(f, "herd:epsilon={e}")?,
                }
                if *first_point == FirstPoint::Zero {
                    f.write_str(",first=zero")?;
                }
                Ok(())
            }
            MethodSpec::Halve { epsilon, strategy, restarts } => {
                write!(f, "halve:epsilon={epsilon},strategy={strategy},restarts={restarts}")
            }
            MethodSpec::Sample { size: SampleSize::Fixed(m) } => write!(f, "sample:m={m}"),
            MethodSpec::Sample { size: SampleSize::Bound { epsilon, delta } } => {
                write!(f, "sample:epsilon={epsilon},delta={delta}")
            }
            MethodSpec::Sorted1d { m } => write!(f, "sorted1d:m={m}"),
            MethodSpec::GridSnap { epsilon } => write!(f, "gridsnap:epsilon={epsilon}"),
        }
    }
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Herd { .. } => "herd",
            MethodSpec::Halve { .. } => "halve",
            MethodSpec::Sample { .. } => "sample",
            MethodSpec::Sorted1d { .. } => "sorted1d",
            MethodSpec::GridSnap { .. } => "gridsnap",
        }
    }
}

fn default_grid_resolution() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub data: DataSource,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    /// Points per axis of the candidate grid (added to `P` itself).
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: usize,
    /// Seed for the stochastic methods.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub params: BTreeMap<String, Value>,
    pub size: Option<usize>,
    /// Construction wall time; excludes evaluation.
    pub build_ms: Option<f64>,
    pub sup_error_estimate: Option<f64>,
    /// Kernel distance; absent when the kernel is not positive definite
    /// enough for it to be real.
    pub rkhs_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config_echo: BenchConfig,
    pub point_count: usize,
    pub dim: usize,
    pub candidate_count: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// The report with every timing field cleared.
    pub fn without_timings(&self) -> Self {
        let mut masked = self.clone();
        for row in &mut masked.rows {
            row.build_ms = None;
        }
        masked
    }
}

/// `P` plus a grid over its widened bounding box, or just `P` when the grid
/// would be too large.
pub fn candidates_for(points: &PointSet, kernel: &Kernel, resolution: usize) -> PointSet {
    sup_error_candidates(points, kernel, Some(resolution)).unwrap_or_else(|_| points.clone())
}

/// A built coreset: something measurable plus report extras.
struct Built {
    measure: Box<dyn Measure>,
    size: usize,
    certified_bound: Option<f64>,
    params: BTreeMap<String, Value>,
}

fn build(points: &PointSet, kernel: &Kernel, method: &MethodSpec, seed: u64) -> Result<Built, kde_coreset::Error> {
    let mut params = BTreeMap::new();
    let view = |c: kde_coreset::Coreset| -> Result<Box<dyn Measure>, kde_coreset::Error> {
        let w = match c.weights() {
            Some(w) => w.to_vec(),
            None => vec![1.0 / c.len() as f64; c.len()],
        };
        Ok(Box::new(kde_coreset::WeightedPoints::new(points.select(c.indices())?, w)?))
    };
    let built = match method {
        MethodSpec::Herd { stop, first_point } => {
            let config = HerdingConfig { first_point: *first_point, ..HerdingConfig::exact() };
            let out = herd(points, kernel, *stop, &config)?;
            params.insert("steps".into(), json!(out.steps()));
            let bound = (out.certified && kernel.is_characteristic()).then(|| out.certified_bound());
            let size = out.distinct_count();
            Built { measure: view(out.coreset)?, size, certified_bound: bound, params }
        }
        MethodSpec::Halve { epsilon, strategy, restarts } => {
            let strategy = strategy.strategy(*restarts, seed);
            let (coreset, report) = halving_coreset(points, kernel, *epsilon, &strategy, &HalvingOptions::default())?;
            params.insert("levels".into(), json!(report.levels.len()));
            params.insert("accumulated_bound".into(), json!(report.total_bound));
            params.insert("seed".into(), json!(seed));
            let bound = report.certified.then_some(report.total_bound);
            let size = coreset.len();
            Built { measure: view(coreset)?, size, certified_bound: bound, params }
        }
        MethodSpec::Sample { size } => {
            let m = match *size {
                SampleSize::Fixed(m) => m,
                SampleSize::Bound { epsilon, delta } => {
                    params.insert("delta".into(), json!(delta));
                    sample_size(epsilon, points.dim(), delta)?.min(points.len())
                }
            };
            params.insert("m".into(), json!(m));
            params.insert("seed".into(), json!(seed));
            let coreset = random_sample(points, m, seed)?;
            Built { measure: view(coreset)?, size: m, certified_bound: None, params }
        }
        MethodSpec::Sorted1d { m } => {
            let coreset = sorted_1d(points, *m)?;
            Built { measure: view(coreset)?, size: *m, certified_bound: None, params }
        }
        MethodSpec::GridSnap { epsilon } => {
            let snap = grid_snap(points, kernel, *epsilon)?;
            params.insert("cell_width".into(), json!(snap.cell_width));
            let size = snap.snapped.len();
            Built { measure: Box::new(snap.snapped), size, certified_bound: Some(epsilon / 2.0), params }
        }
    };
    Ok(built)
}

fn method_params(method: &MethodSpec) -> BTreeMap<String, Value> {
    let text = method.to_string();
    let rest = text.split_once(':').map_or("", |(_, r)| r);
    rest.split(',')
        .filter_map(|p| p.split_once('='))
        .map(|(k, v)| {
            let value = v.parse::<f64>().map_or_else(|_| json!(v), |x| json!(x));
            (k.to_string(), value)
        })
        .collect()
}

/// Runs every method in order. A method whose preconditions fail yields a
/// skipped row; only unusable data or kernel settings abort the run.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, ConfigError> {
    let points = config.data.load()?;
    let kernel = config.kernel.to_kernel()?;
    if config.grid_resolution == 0 {
        return Err(ConfigError::Invalid("grid_resolution must be at least 1".into()));
    }
    let candidates = candidates_for(&points, &kernel, config.grid_resolution);
    let mut rows = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let mut params = method_params(method);
        let start = Instant::now();
        let built = build(&points, &kernel, method, config.seed);
        let build_ms = start.elapsed().as_secs_f64() * 1e3;
        let row = match built.and_then(|b| {
            let (sup, _) = max_abs_difference(&points, b.measure.as_ref(), &kernel, &candidates)?;
            Ok((b, sup))
        }) {
            Ok((b, sup)) => {
                params.extend(b.params);
                BenchRow {
                    method: method.name().into(),
                    params,
                    size: Some(b.size),
                    build_ms: Some(build_ms),
                    sup_error_estimate: Some(sup),
                    rkhs_gap: kernel_distance(&points, b.measure.as_ref(), &kernel).ok(),
                    certified_bound: b.certified_bound,
                    skipped_reason: None,
                }
            }
            Err(e) => BenchRow {
                method: method.name().into(),
                params,
                size: None,
                build_ms: None,
                sup_error_estimate: None,
                rkhs_gap: None,
                certified_bound: None,
                skipped_reason: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(BenchReport {
        config_echo: config.clone(),
        point_count: points.len(),
        dim: points.dim(),
        candidate_count: candidates.len(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_specs_round_trip() {
        for text in [
            "herd:epsilon=0.1",
            "herd:steps=64,first=zero",
            "halve:epsilon=0.05,strategy=alt1d,restarts=16",
            "sample:m=200",
            "sample:epsilon=0.2,delta=0.1",
            "sorted1d:m=10",
            "gridsnap:epsilon=0.1",
        ] {
            let spec: MethodSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        let short: MethodSpec = "halve:epsilon=0.1".parse().unwrap();
        assert_eq!(short.to_string(), "halve:epsilon=0.1,strategy=heuristic,restarts=16");
        for bad in ["herd", "herd:steps=3,epsilon=0.1", "sample:m=x", "gridsnap:eps=0.1", "kmeans:k=3", "sorted1d:m=3,m=4"] {
            assert!(bad.parse::<MethodSpec>().is_err(), "{bad}");
        }
    }

    fn config(methods: &[&str]) -> BenchConfig {
        BenchConfig {
            data: DataSource::Synthetic { generator: Generator::Mixture, n: 300, d: 2, seed: 3 },
            kernel: KernelSpec { family: "gaussian".into(), bandwidth: 1.0 },
            methods: methods.iter().map(|m| m.parse().unwrap()).collect(),
            grid_resolution: 12,
            seed: 5,
        }
    }

    #[test]
    fn herding_and_sampling_rows() {
        let report = run_benchmark(&config(&["herd:epsilon=0.1", "sample:m=200"])).unwrap();
        assert_eq!(report.rows.len(), 2);
        let herd = &report.rows[0];
        assert!(herd.rkhs_gap.unwrap() <= 0.1);
        assert!(herd.certified_bound.unwrap() <= 0.1);
        for row in &report.rows {
            assert!(row.sup_error_estimate.unwrap() <= row.rkhs_gap.unwrap() + 1e-9);
        }
    }

    #[test]
    fn incompatible_methods_are_skipped() {
        let report = run_benchmark(&config(&["sorted1d:m=10", "sample:m=20"])).unwrap();
        assert!(report.rows[0].skipped_reason.is_some());
        assert!(report.rows[1].skipped_reason.is_none());
    }

    #[test]
    fn empty_method_list() {
        let report = run_benchmark(&config(&[])).unwrap();
        assert!(report.rows.is_empty());
        let text = serde_json::to_string(&report).unwrap();
        let back: BenchReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn repeated_runs_match_without_timings() {
        let c = config(&["herd:steps=50", "halve:epsilon=0.2", "sample:epsilon=0.3", "gridsnap:epsilon=0.2"]);
        let a = run_benchmark(&c).unwrap().without_timings();
        let b = run_benchmark(&c).unwrap().without_timings();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn unreadable_input_fails_up_front() {
        let mut c = config(&["sample:m=2"]);
        c.data = DataSource::File { path: "/nonexistent/points.csv".into() };
        assert!(run_benchmark(&c).is_err());
    }
}
