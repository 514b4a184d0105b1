//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use kde_coreset::baselines::{grid_snap, random_sample, sample_size};
use kde_coreset::discrepancy::{
    default_centers, gaussian_separability_check, halving_coreset, kernel_discrepancy, rectangle_discrepancy,
    Coloring, ColoringStrategy, HalvingOptions, RectangleMode,
};
use kde_coreset::herding::{herd, HerdingConfig, StopRule};
use kde_coreset::kde::{grid_over_box, kde, kernel_distance, max_abs_difference, sup_error_candidates};
use kde_coreset::lower_bound::{
    admissible_k_range, certificate_sweep, interval_terms, l1_l2, materialize, minimal_size, witness_gap,
    LbConstruction,
};
use kde_coreset::{Kernel, KernelFamily, PointSet};
use kde_coreset_cli::bench::{run_benchmark, BenchConfig, BenchReport, DataSource, KernelSpec};
use kde_coreset_cli::synthetic::{generate, Generator};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn gaussian() -> Kernel {
    Kernel::gaussian(1.0).unwrap()
}

/// Grid with spacing at most `step` over the bounding box widened by `margin`,
/// plus the points themselves.
fn dense_scan_1d(points: &PointSet, margin: f64, step: f64) -> PointSet {
    let (lo, hi) = points.bounding_box();
    let (a, b) = (lo[0] - margin, hi[0] + margin);
    let res = ((b - a) / step).ceil() as usize + 1;
    let grid = grid_over_box(&[a], &[b], res).unwrap();
    let mut coords = grid.as_flat().to_vec();
    coords.extend_from_slice(points.as_flat());
    PointSet::from_flat(coords, 1).unwrap()
}

fn herding_instances() -> Vec<(String, PointSet)> {
    let mut out = Vec::new();
    let mut seed = 100;
    for &n in &[500usize, 2000] {
        for &d in &[2usize, 5] {
            for kind in [Generator::Uniform, Generator::Mixture] {
                out.push((format!("{kind} n={n} d={d}"), generate(kind, n, d, seed).unwrap()));
                seed += 1;
            }
        }
    }
    out.push(("mixture n=2000 d=2 (2nd seed)".into(), generate(Generator::Mixture, 2000, 2, 900).unwrap()));
    out.push(("uniform n=500 d=5 (2nd seed)".into(), generate(Generator::Uniform, 500, 5, 901).unwrap()));
    out
}

const HERDING_STEPS: usize = 2048;

/// Criteria 1 and 2 share their runs.
fn herding_runs() -> Vec<(String, kde_coreset::herding::HerdingTrace)> {
    herding_instances()
        .into_iter()
        .map(|(name, p)| {
            let out = herd(&p, &gaussian(), StopRule::Steps(HERDING_STEPS), &HerdingConfig::exact()).unwrap();
            assert!(out.certified);
            (name, out.trace)
        })
        .collect()
}

fn criterion_1(runs: &[(String, kde_coreset::herding::HerdingTrace)]) -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (name, trace) in runs {
        assert_eq!(trace.records.len(), HERDING_STEPS);
        for r in &trace.records {
            let slack = r.gap_sq - 2.0 / r.t as f64;
            worst = worst.max(slack);
            if slack > TOL {
                failures.push(format!("{name} t={}", r.t));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!("{} runs x {HERDING_STEPS} steps, max gap_sq(t) - 2/t = {worst:.3e}, violations {failures:?}", runs.len()),
    )
}

fn criterion_2(runs: &[(String, kde_coreset::herding::HerdingTrace)]) -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for (_, trace) in runs {
        for w in trace.records.windows(2) {
            let (tp, tc) = (w[0].t as f64, w[1].t as f64);
            let excess = tc * tc * w[1].gap_sq - tp * tp * w[0].gap_sq - 2.0;
            worst = worst.max(excess);
            if excess > TOL {
                violations += 1;
            }
        }
    }
    verdict(violations == 0, format!("max t²g(t) - (t-1)²g(t-1) - 2 = {worst:.3e}, violations {violations}"))
}

fn bench_config(data: DataSource, family: &str, bandwidth: f64, methods: &[&str]) -> BenchConfig {
    BenchConfig {
        data,
        kernel: KernelSpec { family: family.into(), bandwidth },
        methods: methods.iter().map(|m| m.parse().unwrap()).collect(),
        grid_resolution: 24,
        seed: 17,
    }
}

fn criterion_3() -> Verdict {
    let synthetic = |generator, n, d, seed| DataSource::Synthetic { generator, n, d, seed };
    let configs = [
        bench_config(
            synthetic(Generator::Mixture, 500, 2, 1),
            "gaussian",
            1.0,
            &["herd:epsilon=0.1", "halve:epsilon=0.2", "sample:m=100", "gridsnap:epsilon=0.2"],
        ),
        bench_config(
            synthetic(Generator::Uniform, 400, 3, 2),
            "laplace",
            0.5,
            &["herd:steps=200", "sample:epsilon=0.3", "gridsnap:epsilon=0.3", "halve:epsilon=0.2"],
        ),
        bench_config(
            synthetic(Generator::Uniform, 300, 1, 3),
            "gaussian",
            0.2,
            &["sorted1d:m=30", "halve:epsilon=0.1,strategy=alt1d", "herd:steps=100", "sample:m=30"],
        ),
        bench_config(
            synthetic(Generator::Mixture, 300, 2, 4),
            "laplace",
            1.0,
            &["herd:epsilon=0.15", "sample:m=60", "gridsnap:epsilon=0.1"],
        ),
    ];
    let mut rows = 0;
    let mut bad = Vec::new();
    for config in &configs {
        let report = run_benchmark(config).unwrap();
        for row in report.rows.iter().filter(|r| r.skipped_reason.is_none()) {
            rows += 1;
            let (sup, gap) = (row.sup_error_estimate.unwrap(), row.rkhs_gap.unwrap());
            if sup > gap + TOL {
                bad.push(format!("{} {}: {sup} > {gap}", config.kernel.family, row.method));
            }
        }
    }

    // reverse direction on tiny 1-d sets with a 1e-4 scan
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut instances = 0;
    for family in [KernelFamily::Gaussian, KernelFamily::Laplace] {
        let kernel = Kernel::new(family, 0.5).unwrap();
        for n in 2..=12usize {
            let p = PointSet::from_flat((0..n).map(|_| rng.random::<f64>() * 2.0).collect(), 1).unwrap();
            let scan = dense_scan_1d(&p, 4.0, 1e-4);
            let sampled = random_sample(&p, n.div_ceil(3), rng.random()).unwrap();
            let herded = herd(&p, &kernel, StopRule::Steps(3), &HerdingConfig::exact()).unwrap().coreset;
            for q in [sampled, herded] {
                let view = q.view(&p).unwrap();
                let gap = kernel_distance(&p, &view, &kernel).unwrap();
                let (sup, _) = max_abs_difference(&p, &view, &kernel, &scan).unwrap();
                if sup > 0.0 {
                    worst = worst.max(gap * gap / (2.0 * sup));
                }
                if gap * gap > 2.0 * sup + 1e-6 {
                    bad.push(format!("reverse n={n} {family}: {} > {}", gap * gap, 2.0 * sup));
                }
                instances += 1;
            }
        }
    }
    verdict(
        bad.is_empty(),
        format!("{rows} bench rows sup <= gap; {instances} reverse checks, max D²/(2·sup) = {worst:.3}; failures {bad:?}"),
    )
}

fn criterion_4() -> Verdict {
    let instances = [(64usize, 1usize), (64, 2), (40, 2), (32, 3), (24, 3), (16, 3)];
    let kernel = gaussian();
    let options = HalvingOptions::default();
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    for (idx, &(n, d)) in instances.iter().enumerate() {
        let kind = if idx % 2 == 0 { Generator::Uniform } else { Generator::Mixture };
        let p = generate(kind, n, d, 400 + idx as u64).unwrap();
        let centers = default_centers(&p, &kernel, options.grid_resolution).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(500 + idx as u64);
        let mut signs: Vec<i8> = (0..n).map(|i| if i < n / 2 { -1 } else { 1 }).collect();
        for _ in 0..200 {
            signs.shuffle(&mut rng);
            let chi = Coloring::new(&p, signs.clone()).unwrap();
            let kd = kernel_discrepancy(&p, &chi, &kernel, &centers).unwrap().value;
            let rd = rectangle_discrepancy(&p, &chi, RectangleMode::Exact).unwrap().value as f64;
            worst = worst.max(kd - rd);
            if kd > rd + TOL {
                violations += 1;
            }
            checks += 1;
        }
    }
    verdict(violations == 0, format!("{checks} colorings, max kernel - rectangle = {worst:.3}, violations {violations}"))
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = 1 + i % 2;
        let c: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        worst = worst.max(gaussian_separability_check(&c, &x, 10_000).unwrap().residual);
    }
    verdict(worst <= 1e-3, format!("20 pairs, max residual {worst:.3e}"))
}

fn criterion_6() -> Verdict {
    let kernel = gaussian();
    let options = HalvingOptions::default();

    let line = generate(Generator::Uniform, 4096, 1, 61).unwrap();
    let (q1, r1) = halving_coreset(&line, &kernel, 0.05, &ColoringStrategy::Alternating1d, &options).unwrap();
    let scan = dense_scan_1d(&line, 3.0, 1e-4);
    let (sup1, _) = max_abs_difference(&line, &q1.view(&line).unwrap(), &kernel, &scan).unwrap();
    let ok1 = q1.len() <= 128 && sup1 <= 0.05;

    let plane = generate(Generator::Uniform, 1024, 2, 62).unwrap();
    let strategy = ColoringStrategy::Heuristic { restarts: 16, seed: 63 };
    let (q2, r2) = halving_coreset(&plane, &kernel, 0.1, &strategy, &options).unwrap();
    let candidates = sup_error_candidates(&plane, &kernel, Some(128)).unwrap();
    let (sup2, _) = max_abs_difference(&plane, &q2.view(&plane).unwrap(), &kernel, &candidates).unwrap();
    let ok2 = r2.certified && !r2.levels.is_empty() && r2.total_bound <= 0.1 && sup2 <= r2.total_bound;

    verdict(
        ok1 && ok2,
        format!(
            "d=1: {} points, {} levels, bound {:.4}, scan sup {sup1:.4}; d=2: {} points, {} levels, certified {} bound {:.4}, sup {sup2:.4}",
            q1.len(),
            r1.levels.len(),
            r1.total_bound,
            q2.len(),
            r2.levels.len(),
            r2.certified,
            r2.total_bound
        ),
    )
}

fn criterion_7() -> Verdict {
    let kernel = gaussian();
    let (z, r) = (2.0, 1.0);
    let mut worst_dist: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut admissible = 0;
    let mut checked = 0;
    for n in [4usize, 16, 64, 512] {
        let range = admissible_k_range(n, z, r).unwrap();
        // every k is checked; the admissible ones are a subset
        for k in 1..n {
            let m = materialize(&LbConstruction::new(n, k, z, r, kernel).unwrap()).unwrap();
            let (l1, l2) = l1_l2(n, k, z).unwrap();
            for (i, p) in m.points.iter().enumerate() {
                let dist = p.iter().zip(&m.witness).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                worst_dist = worst_dist.max((dist - if i < k { l1 } else { l2 }).abs());
            }
            let q = m.points.select(&(0..k).collect::<Vec<_>>()).unwrap();
            let explicit = kde(&q, &kernel, &m.witness).unwrap() - kde(&m.points, &kernel, &m.witness).unwrap();
            worst_gap = worst_gap.max((explicit - witness_gap(n, k, z, &kernel).unwrap()).abs());
            admissible += range.contains(k) as usize;
            checked += 1;
        }
    }
    let exact = interval_terms(2.0, 1.0).unwrap() == (10.24, 2.0 / 3.0) && interval_terms(1.0, 0.5).unwrap().0 == 10.24;
    verdict(
        worst_dist <= 1e-10 && worst_gap <= 1e-10 && exact,
        format!(
            "{checked} (n,k) pairs ({admissible} admissible), max distance error {worst_dist:.2e}, max gap error {worst_gap:.2e}, footnote constants exact: {exact}"
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for family in [KernelFamily::Gaussian, KernelFamily::Laplace] {
        let kernel = Kernel::new(family, 1.0).unwrap();
        let rows = certificate_sweep(4096, 1.0, 0.5, &kernel).unwrap();
        let holds = !rows.is_empty() && rows.iter().all(|c| c.holds) && rows.last().unwrap().k == 2048;
        let min_ratio = rows.iter().map(|c| c.lhs / c.rhs).fold(f64::INFINITY, f64::min);
        let m = minimal_size(4096, 1.0, 0.5, &kernel, 0.05).unwrap();
        let size_ok = m.is_some_and(|m| m.k as f64 > m.threshold);
        pass &= holds && size_ok;
        parts.push(format!(
            "{family}: {} certificates hold {holds} (min lhs/rhs {min_ratio:.3}), minimal size {:?} vs threshold {:.3}",
            rows.len(),
            m.map(|m| m.k),
            m.map_or(f64::NAN, |m| m.threshold)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_9() -> Verdict {
    let kernel = gaussian();
    let (eps, delta, d) = (0.2, 0.1, 2);
    let m = sample_size(eps, d, delta).unwrap();
    let p = generate(Generator::Mixture, 2000, d, 90).unwrap();
    let candidates = sup_error_candidates(&p, &kernel, Some(48)).unwrap();
    let mut met = 0;
    let mut worst_sample: f64 = 0.0;
    for trial in 0..50u64 {
        let q = random_sample(&p, m, 1000 + trial).unwrap();
        let (sup, _) = max_abs_difference(&p, &q.view(&p).unwrap(), &kernel, &candidates).unwrap();
        worst_sample = worst_sample.max(sup);
        met += (sup <= eps) as usize;
    }
    let mut snap_ok = 0;
    let mut worst_snap: f64 = 0.0;
    for trial in 0..50u64 {
        let inst = generate(Generator::Mixture, 400, d, 2000 + trial).unwrap();
        let snap = grid_snap(&inst, &kernel, eps).unwrap();
        let cands = sup_error_candidates(&inst, &kernel, Some(48)).unwrap();
        let (sup, _) = max_abs_difference(&inst, &snap.snapped, &kernel, &cands).unwrap();
        worst_snap = worst_snap.max(sup);
        snap_ok += (sup <= eps) as usize;
    }
    verdict(
        met >= 45 && snap_ok == 50,
        format!("sample m={m}: {met}/50 within {eps} (worst {worst_sample:.4}); grid snap {snap_ok}/50 (worst {worst_snap:.4})"),
    )
}

fn run_bench_binary(config: &Path, output: &Path, threads: usize) -> BenchReport {
    let status = Command::new(env!("CARGO_BIN_EXE_kdecoreset"))
        .args(["--threads", &threads.to_string(), "bench", "--config"])
        .arg(config)
        .arg("--output")
        .arg(output)
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    serde_json::from_slice::<BenchReport>(&std::fs::read(output).unwrap()).unwrap().without_timings()
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = bench_config(
        DataSource::Synthetic { generator: Generator::Mixture, n: 600, d: 2, seed: 10 },
        "gaussian",
        1.0,
        &["herd:epsilon=0.1", "halve:epsilon=0.2", "sample:epsilon=0.2", "sorted1d:m=10", "gridsnap:epsilon=0.2"],
    );
    let config_path = dir.path().join("bench.json");
    std::fs::write(&config_path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
    let mut reports = Vec::new();
    for (i, threads) in [1usize, 1, 8, 8].into_iter().enumerate() {
        let report = run_bench_binary(&config_path, &dir.path().join(format!("report{i}.json")), threads);
        reports.push(serde_json::to_string(&report).unwrap());
    }
    let same = reports.iter().all(|r| *r == reports[0]);
    verdict(same, format!("2 runs at 1 thread, 2 at 8 threads; identical without timings: {same}"))
}

fn main() {
    let mut results = Vec::new();
    let mut run = |id: usize, name: &str, limit_s: Option<f64>, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let secs = start.elapsed().as_secs_f64();
        let mut v = outcome.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if let Some(limit) = limit_s {
            if secs > limit {
                v.pass = false;
                v.detail.push_str(&format!("; exceeded {limit} s"));
            }
        }
        println!("[{}] criterion {id:>2} {name}: {} ({secs:.1} s)", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push(v.pass);
    };

    let mut runs = Vec::new();
    run(1, "herding guarantee", Some(60.0), &mut || {
        runs = herding_runs();
        criterion_1(&runs)
    });
    run(2, "herding recursion", None, &mut || criterion_2(&runs));
    run(3, "two-sided error bounds", None, &mut criterion_3);
    run(4, "kernel vs rectangle discrepancy", Some(120.0), &mut criterion_4);
    run(5, "separable quadrature", None, &mut criterion_5);
    run(6, "halving", None, &mut criterion_6);
    run(7, "lower-bound closed forms", None, &mut criterion_7);
    run(8, "lower-bound certificate", None, &mut criterion_8);
    run(9, "baseline sanity", None, &mut criterion_9);
    run(10, "bench determinism", None, &mut criterion_10);

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
