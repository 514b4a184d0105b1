//! Kernel herding: Frank-Wolfe iteration on the kernel mean `μ = μ̂_P`.
//!
//! Starting from `x_1 = φ(p_{i_1})`, each step picks
//! `i_t = argmin_i ⟨x_t − μ, φ_i − μ⟩` and moves to the running average
//! `x_{t+1} = (1/(t+1)) φ_{i_t} + (t/(t+1)) x_t`, so `x_t` is always the uniform
//! mean of the `t` selected points. Because `⟨x_t − μ, φ_i − μ⟩` differs from
//! `s_i/t − m_i` only by terms constant in `i`, with
//! `s_i = Σ_{j selected} K(p_j, p_i)` and `m_i = kde_P(p_i)`, one step costs
//! `n` kernel evaluations.
//!
//! Optimal selection gives `t²‖x_t − μ‖² ≤ (t−1)²‖x_{t−1} − μ‖² + 2` and hence
//! `‖x_T − μ‖² ≤ 2/T`. The state tracks `‖x_t − μ‖²` exactly so every run
//! carries its own certificate.

use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kde::{clamp_residue, kde_unchecked};
use crate::kernels::Kernel;
use crate::par;
use crate::points::{Coreset, PointSet};
use crate::sum::CompensatedSum;

/// Slack on the per-step certificate checks.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstPoint {
    /// The point with the largest `kde_P(p_i)`, lowest index on ties.
    #[default]
    Densest,
    /// Always index 0.
    Zero,
}

/// Replaces the exact `O(n²)` mean embedding by a seeded subsample estimate for
/// large inputs. Runs that use it are not certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeanSubsample {
    pub threshold: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for MeanSubsample {
    fn default() -> Self {
        Self { threshold: 20_000, size: 4_096, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HerdingConfig {
    pub first_point: FirstPoint,
    /// `None` always computes the exact mean embedding.
    pub mean_subsample: Option<MeanSubsample>,
}

impl HerdingConfig {
    pub fn exact() -> Self {
        Self { first_point: FirstPoint::Densest, mean_subsample: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Steps(usize),
    /// Runs `T = ⌈2/ε²⌉` steps.
    Epsilon(f64),
}

impl StopRule {
    pub fn steps(self) -> Result<usize> {
        match self {
            StopRule::Steps(0) => Err(Error::InvalidInput("herding needs at least one step")),
            StopRule::Steps(t) => Ok(t),
            StopRule::Epsilon(eps) => {
                if !(eps > 0.0 && eps <= 1.0) {
                    return Err(Error::OutOfRange { what: "epsilon", value: eps });
                }
                Ok(libm::ceil(2.0 / (eps * eps)) as usize)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HerdingRecord {
    pub t: usize,
    /// Index that entered the average at this step (`x_t` includes it).
    pub chosen_index: usize,
    /// `‖x_t − μ‖²_H`.
    pub gap_sq: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HerdingTrace {
    pub records: Vec<HerdingRecord>,
}

impl HerdingTrace {
    /// First `t` with `t² gap(t) > 2t + tol`.
    pub fn first_bound_violation(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| {
            let t = r.t as f64;
            t * t * r.gap_sq > 2.0 * t + tol
        }).map(|r| r.t)
    }

    /// First `t ≥ 2` with `t² gap(t) − (t−1)² gap(t−1) > 2 + tol`.
    pub fn first_recursion_violation(&self, tol: f64) -> Option<usize> {
        self.records.windows(2).find(|w| {
            let (prev, cur) = (&w[0], &w[1]);
            let (tp, tc) = (prev.t as f64, cur.t as f64);
            tc * tc * cur.gap_sq - tp * tp * prev.gap_sq > 2.0 + tol
        }).map(|w| w[1].t)
    }

    pub fn final_gap_sq(&self) -> Option<f64> {
        self.records.last().map(|r| r.gap_sq)
    }
}

/// Mutable herding state over a borrowed point set.
#[derive(Debug, Clone)]
pub struct HerdingState<'a> {
    points: &'a PointSet,
    kernel: Kernel,
    /// `m_i = kde_P(p_i)` (or its subsample estimate).
    mean_embedding: Vec<f64>,
    /// `κ(P, P)`, the mean of `m`.
    self_similarity: f64,
    /// `s_i = Σ_{j selected} K(p_j, p_i)`.
    running: Vec<f64>,
    selected: Vec<usize>,
    pair_sum: CompensatedSum,
    mean_sum: CompensatedSum,
    certified: bool,
}

fn exact_mean_embedding(points: &PointSet, kernel: &Kernel) -> Vec<f64> {
    par::map_range(points.len(), |i| kde_unchecked(points, kernel, points.point(i)))
}

fn subsampled_mean_embedding(points: &PointSet, kernel: &Kernel, size: usize, seed: u64) -> Result<Vec<f64>> {
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = index::sample(&mut rng, n, size.clamp(1, n)).into_vec();
    let subset = points.select(&sample)?;
    Ok(par::map_range(n, |i| kde_unchecked(&subset, kernel, points.point(i))))
}

/// `argmax_i kde_P(p_i)` with the lowest index on ties.
pub fn first_point(points: &PointSet, kernel: &Kernel) -> usize {
    densest(&exact_mean_embedding(points, kernel))
}

fn densest(mean_embedding: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in mean_embedding.iter().enumerate() {
        if m > mean_embedding[best] {
            best = i;
        }
    }
    best
}

impl<'a> HerdingState<'a> {
    /// Precomputes the mean embedding and selects the first point.
    pub fn new(points: &'a PointSet, kernel: Kernel, config: &HerdingConfig) -> Result<Self> {
        let (mean_embedding, certified) = match config.mean_subsample {
            Some(sub) if points.len() > sub.threshold => {
                (subsampled_mean_embedding(points, &kernel, sub.size, sub.seed)?, false)
            }
            _ => (exact_mean_embedding(points, &kernel), true),
        };
        let self_similarity =
            mean_embedding.iter().copied().collect::<CompensatedSum>().value() / points.len() as f64;
        let first = match config.first_point {
            FirstPoint::Densest => densest(&mean_embedding),
            FirstPoint::Zero => 0,
        };
        let mut state = Self {
            points,
            kernel,
            running: alloc::vec![0.0; points.len()],
            mean_embedding,
            self_similarity,
            selected: Vec::new(),
            pair_sum: CompensatedSum::new(),
            mean_sum: CompensatedSum::new(),
            certified,
        };
        state.select(first);
        Ok(state)
    }

    fn select(&mut self, i: usize) {
        // K(p_i, p_i) = 1 plus twice the cross terms with earlier selections.
        self.pair_sum.add(2.0 * self.running[i] + 1.0);
        self.mean_sum.add(self.mean_embedding[i]);
        let (points, kernel) = (self.points, self.kernel);
        let chosen = points.point(i);
        par::update_each(&mut self.running, |j, s| *s += kernel.eval_unchecked(points.point(j), chosen));
        self.selected.push(i);
    }

    /// Number of selected points `t`.
    pub fn t(&self) -> usize {
        self.selected.len()
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn mean_embedding(&self) -> &[f64] {
        &self.mean_embedding
    }

    pub fn running_sums(&self) -> &[f64] {
        &self.running
    }

    pub fn self_similarity(&self) -> f64 {
        self.self_similarity
    }

    /// Whether the mean embedding is exact (so the gap is certified).
    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// `s_i/t − m_i` for every `i`: the selection criterion up to a constant.
    pub fn scores(&self) -> Vec<f64> {
        let t = self.t() as f64;
        self.running.iter().zip(&self.mean_embedding).map(|(s, m)| s / t - m).collect()
    }

    /// Selects `argmin_i (s_i/t − m_i)` (lowest index on ties) and adds it to
    /// the running average.
    pub fn herding_step(&mut self) -> usize {
        let t = self.t() as f64;
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (i, (s, m)) in self.running.iter().zip(&self.mean_embedding).enumerate() {
            let score = s / t - m;
            if score < best_score {
                best = i;
                best_score = score;
            }
        }
        self.select(best);
        best
    }

    /// `‖x_t − μ‖²_H = (1/t²)ΣΣ K(p_j, p_j') − (2/t)Σ m_j + κ(P, P)`.
    pub fn gap_squared(&self) -> Result<f64> {
        let t = self.t() as f64;
        let raw = self.pair_sum.value() / (t * t) - 2.0 * self.mean_sum.value() / t + self.self_similarity;
        if self.certified {
            clamp_residue("herding gap", raw)
        } else {
            Ok(raw.max(0.0))
        }
    }
}

#[derive(Debug, Clone)]
pub struct HerdingOutcome {
    /// Distinct selected indices, weighted by multiplicity when it is uneven.
    pub coreset: Coreset,
    pub trace: HerdingTrace,
    /// Selected indices in order, repeats included.
    pub selections: Vec<usize>,
    /// False when the mean embedding was subsampled.
    pub certified: bool,
}

impl HerdingOutcome {
    pub fn steps(&self) -> usize {
        self.selections.len()
    }

    pub fn distinct_count(&self) -> usize {
        self.coreset.len()
    }

    /// `√(2/T)`, the guaranteed bound on `‖x_T − μ‖`.
    pub fn certified_bound(&self) -> f64 {
        libm::sqrt(2.0 / self.steps() as f64)
    }
}

/// Runs kernel herding until the stop rule is met.
///
/// For characteristic kernels with an exact mean embedding, every step is
/// checked against `t² gap(t) ≤ (t−1)² gap(t−1) + 2` and `gap(t) ≤ 2/t`.
pub fn herd(points: &PointSet, kernel: &Kernel, stop: StopRule, config: &HerdingConfig) -> Result<HerdingOutcome> {
    let steps = stop.steps()?;
    let mut state = HerdingState::new(points, *kernel, config)?;
    let check = state.is_certified() && kernel.is_characteristic();
    let mut trace = HerdingTrace { records: Vec::with_capacity(steps) };
    let mut chosen = state.selected()[0];
    loop {
        let t = state.t();
        let gap_sq = state.gap_squared()?;
        if check {
            let tf = t as f64;
            let prev = trace.records.last().map(|r| { let tp = r.t as f64; tp * tp * r.gap_sq }).unwrap_or(0.0);
            if tf * tf * gap_sq > prev + 2.0 + CERTIFICATE_TOLERANCE {
                return Err(Error::CertificateViolated { t });
            }
        }
        trace.records.push(HerdingRecord { t, chosen_index: chosen, gap_sq });
        if t == steps {
            break;
        }
        chosen = state.herding_step();
    }
    let certified = state.is_certified();
    let selections = state.selected;
    Ok(HerdingOutcome {
        coreset: Coreset::from_multiset(points, &selections)?,
        trace,
        selections,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::kernel_distance;
    use crate::points::Measure;
    use alloc::vec;
    use rand::Rng;

    fn uniform(n: usize, d: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointSet::from_flat((0..n * d).map(|_| rng.random::<f64>()).collect(), d).unwrap()
    }

    fn two_clusters(heavy: usize, light: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = Vec::new();
        for _ in 0..heavy {
            coords.extend([rng.random::<f64>() * 0.5, rng.random::<f64>() * 0.5]);
        }
        for _ in 0..light {
            coords.extend([8.0 + rng.random::<f64>() * 0.5, 8.0 + rng.random::<f64>() * 0.5]);
        }
        PointSet::from_flat(coords, 2).unwrap()
    }

    /// `⟨x_t − μ, φ_i − μ⟩` for every `i`, materialized by explicit double loops.
    fn oracle_inner_products(points: &PointSet, kernel: &Kernel, selected: &[usize]) -> Vec<f64> {
        let n = points.len();
        let t = selected.len() as f64;
        let k = |a: usize, b: usize| kernel.eval(points.point(a), points.point(b)).unwrap();
        let mut mu_mu = 0.0;
        for a in 0..n {
            for b in 0..n {
                mu_mu += k(a, b);
            }
        }
        mu_mu /= (n * n) as f64;
        let mut x_mu = 0.0;
        for &j in selected {
            for b in 0..n {
                x_mu += k(j, b);
            }
        }
        x_mu /= t * n as f64;
        (0..n)
            .map(|i| {
                let x_phi: f64 = selected.iter().map(|&j| k(j, i)).sum::<f64>() / t;
                let mu_phi: f64 = (0..n).map(|b| k(b, i)).sum::<f64>() / n as f64;
                x_phi - mu_phi - x_mu + mu_mu
            })
            .collect()
    }

    fn argmin(values: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v < values[best] {
                best = i;
            }
        }
        best
    }

    #[test]
    fn single_point_always_selected() {
        let p = PointSet::from_flat(vec![0.3, 0.4], 2).unwrap();
        let g = Kernel::gaussian(1.0).unwrap();
        let out = herd(&p, &g, StopRule::Steps(5), &HerdingConfig::default()).unwrap();
        assert_eq!(out.selections, vec![0; 5]);
        assert!(out.trace.records.iter().all(|r| r.gap_sq == 0.0));
        assert_eq!(out.coreset.indices(), &[0]);
    }

    #[test]
    fn symmetric_far_pair_alternates() {
        let p = PointSet::from_flat(vec![-10.0, 10.0], 1).unwrap();
        let g = Kernel::gaussian(1.0).unwrap();
        let out = herd(&p, &g, StopRule::Steps(2), &HerdingConfig::default()).unwrap();
        assert_eq!(out.selections, vec![0, 1]);
        assert_eq!(out.coreset.weights(), None);
        assert!(out.trace.final_gap_sq().unwrap() < 1e-15);
    }

    #[test]
    fn identical_points_select_index_zero() {
        let p = PointSet::from_flat(vec![1.0; 8], 2).unwrap();
        let g = Kernel::gaussian(1.0).unwrap();
        let mut state = HerdingState::new(&p, g, &HerdingConfig::default()).unwrap();
        assert_eq!(state.selected(), &[0]);
        for _ in 0..4 {
            assert_eq!(state.herding_step(), 0);
        }
    }

    #[test]
    fn first_point_prefers_heavy_cluster() {
        let g = Kernel::gaussian(1.0).unwrap();
        let p = two_clusters(90, 10, 3);
        let mean: Vec<f64> = (0..p.len()).map(|i| crate::kde::kde(&p, &g, p.point(i)).unwrap()).collect();
        let first = first_point(&p, &g);
        assert!(first < 90);
        assert!(mean.iter().all(|&m| m <= mean[first]));
        assert_eq!(first_point(&PointSet::from_flat(vec![2.0], 1).unwrap(), &g), 0);
        assert_eq!(first_point(&PointSet::from_flat(vec![2.0; 5], 1).unwrap(), &g), 0);

        let zero = HerdingConfig { first_point: FirstPoint::Zero, mean_subsample: None };
        let p = uniform(10, 2, 1);
        assert_eq!(HerdingState::new(&p, g, &zero).unwrap().selected(), &[0]);
    }

    #[test]
    fn unvisited_cluster_is_chosen_next() {
        let g = Kernel::gaussian(1.0).unwrap();
        let p = two_clusters(40, 10, 8);
        let mut state = HerdingState::new(&p, g, &HerdingConfig::default()).unwrap();
        let mut picks = state.selected().to_vec();
        while picks.iter().all(|&i| i < 40) {
            let oracle = oracle_inner_products(&p, &g, state.selected());
            let next = state.herding_step();
            assert_eq!(next, argmin(&oracle));
            picks.push(next);
        }
        // the first light-cluster pick is the one closest to the mean, i.e. largest m_i
        let i = *picks.last().unwrap();
        assert!(i >= 40);
        let m = state.mean_embedding();
        assert!((40..50).all(|j| m[j] <= m[i]));
    }

    #[test]
    fn step_matches_inner_product_oracle() {
        let g = Kernel::gaussian(0.5).unwrap();
        let p = uniform(50, 2, 21);
        let mut state = HerdingState::new(&p, g, &HerdingConfig::default()).unwrap();
        for _ in 0..40 {
            let oracle = oracle_inner_products(&p, &g, state.selected());
            // selection optimality: the chosen inner product is never positive
            assert!(oracle[argmin(&oracle)] <= 1e-12);
            let scores = state.scores();
            let shift = oracle[0] - scores[0];
            for (o, s) in oracle.iter().zip(&scores) {
                assert!((o - s - shift).abs() < 1e-12);
            }
            assert_eq!(state.herding_step(), argmin(&oracle));
        }
    }

    #[test]
    fn gap_matches_kernel_distance() {
        let g = Kernel::gaussian(1.0).unwrap();
        let p = uniform(40, 3, 5);
        let mut state = HerdingState::new(&p, g, &HerdingConfig::default()).unwrap();
        let j = state.selected()[0];
        let single = p.select(&[j]).unwrap();
        let expected = 1.0 - 2.0 * state.mean_embedding()[j] + state.self_similarity();
        assert!((state.gap_squared().unwrap() - expected).abs() < 1e-12);
        assert!((expected - kernel_distance(&single, &p, &g).unwrap().powi(2)).abs() < 1e-12);
        for _ in 0..30 {
            state.herding_step();
            let multiset = p.select(state.selected()).unwrap();
            let d = kernel_distance(&multiset, &p, &g).unwrap();
            assert!((state.gap_squared().unwrap() - d * d).abs() < 1e-10);
        }
    }

    #[test]
    fn gap_is_zero_after_selecting_everything_once() {
        let g = Kernel::gaussian(1.0).unwrap();
        let p = PointSet::from_flat(vec![0.0, 3.0, 6.0, 9.0], 1).unwrap();
        let mut state = HerdingState::new(&p, g, &HerdingConfig { first_point: FirstPoint::Zero, mean_subsample: None }).unwrap();
        for _ in 0..3 {
            state.herding_step();
        }
        let mut sel = state.selected().to_vec();
        sel.sort_unstable();
        assert_eq!(sel, vec![0, 1, 2, 3]);
        assert!(state.gap_squared().unwrap() < 1e-12);
    }

    #[test]
    fn certificate_on_seeded_run() {
        let g = Kernel::gaussian(1.0).unwrap();
        let p = uniform(200, 5, 42);
        let out = herd(&p, &g, StopRule::Steps(128), &HerdingConfig::default()).unwrap();
        assert!(out.trace.final_gap_sq().unwrap() <= 2.0 / 128.0);
        assert_eq!(out.trace.first_bound_violation(1e-9), None);
        assert_eq!(out.trace.first_recursion_violation(1e-9), None);
        let total: f64 = (0..out.coreset.len()).map(|k| out.coreset.weight(k)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // weights reproduce x_T exactly
        let view = out.coreset.view(&p).unwrap();
        let d = kernel_distance(&view, &p, &g).unwrap();
        assert!((d * d - out.trace.final_gap_sq().unwrap()).abs() < 1e-10);
        assert!(out.distinct_count() <= out.steps());
        assert!(view.len() == out.distinct_count());
    }

    #[test]
    fn epsilon_stop_rule() {
        assert_eq!(StopRule::Epsilon(0.1).steps().unwrap(), 200);
        assert_eq!(StopRule::Epsilon(1.0).steps().unwrap(), 2);
        assert!(StopRule::Epsilon(0.0).steps().is_err());
        assert!(StopRule::Epsilon(1.5).steps().is_err());
        assert!(StopRule::Steps(0).steps().is_err());

        let g = Kernel::gaussian(1.0).unwrap();
        let p = uniform(150, 2, 9);
        let out = herd(&p, &g, StopRule::Epsilon(0.2), &HerdingConfig::default()).unwrap();
        assert_eq!(out.steps(), 50);
        assert!(out.trace.final_gap_sq().unwrap().sqrt() <= 0.2);
    }

    #[test]
    fn subsampled_mean_is_flagged_uncertified() {
        let g = Kernel::gaussian(1.0).unwrap();
        let p = uniform(64, 2, 2);
        let config = HerdingConfig {
            first_point: FirstPoint::Densest,
            mean_subsample: Some(MeanSubsample { threshold: 32, size: 16, seed: 1 }),
        };
        let out = herd(&p, &g, StopRule::Steps(10), &config).unwrap();
        assert!(!out.certified);
        let exact = herd(&p, &g, StopRule::Steps(10), &HerdingConfig::default()).unwrap();
        assert!(exact.certified);
    }
}
