//! Combinatorial discrepancy of ±1 colorings and halving coresets.
//!
//! For the Gaussian kernel, `K(c, x) = Π_i ∫_0^∞ 2r e^{−r²} 1(|x_i − c_i| ≤ r) dr`
//! writes the kernel as an average of indicator functions of axis-aligned
//! boxes centred at `c`. Pushing a signed sum `Σ_p χ(p) K(c, p)` through that
//! average shows the kernel discrepancy of a coloring never exceeds its
//! rectangle discrepancy. Halving keeps one color class of a balanced
//! coloring; the kernel density estimate moves by at most the discrepancy
//! divided by the input size, so the exact rectangle discrepancy certifies
//! each level.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kde::{argmax_with_witness, sup_error_candidates};
use crate::kernels::{Kernel, KernelFamily};
use crate::par;
use crate::points::{Coreset, PointSet};
use crate::sum::CompensatedSum;

/// Work limit (bucket visits) for the exact rectangle sweep.
pub const EXACT_WORK_BUDGET: f64 = 1e9;

/// Work limit under which [`color_heuristic`] scores candidates exactly.
pub const SCORING_WORK_BUDGET: f64 = 1e8;

/// Largest rank-space prefix table used to answer sampled rectangle queries.
const PREFIX_TABLE_LIMIT: usize = 1 << 22;

/// Upper limit of the radial integral in [`gaussian_separability_check`].
pub const SEPARABILITY_RADIUS: f64 = 6.0;

/// A ±1 label per point of a parent point set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    signs: Vec<i8>,
}

impl Coloring {
    pub fn new(parent: &PointSet, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != parent.len() {
            return Err(Error::InvalidInput("coloring length differs from point count"));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("coloring entries must be +1 or -1"));
        }
        Ok(Self { signs })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// `Σ_p χ(p)`.
    pub fn balance(&self) -> i64 {
        self.signs.iter().map(|&s| s as i64).sum()
    }

    pub fn plus_count(&self) -> usize {
        self.signs.iter().filter(|&&s| s == 1).count()
    }
}

/// Closed axis-aligned box `{x : lower_i ≤ x_i ≤ upper_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Rectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(m, big_m)| !(m <= big_m)) {
            return Err(Error::InvalidInput("rectangle needs lower <= upper on every axis"));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (m, big_m))| m <= v && v <= big_m)
    }

    /// `Σ_{p ∈ R} χ(p)`.
    pub fn signed_count(&self, points: &PointSet, chi: &Coloring) -> i64 {
        points
            .iter()
            .zip(chi.signs())
            .filter(|(p, _)| self.contains(p))
            .map(|(_, &s)| s as i64)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectangleMode {
    /// Every canonical rectangle (faces at point coordinates).
    Exact,
    /// `count` random canonical rectangles; gives a lower bound.
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectangleDiscrepancy {
    pub value: u64,
    pub witness: Rectangle,
    /// True when every canonical rectangle was examined.
    pub exact: bool,
}

/// Points in rank space: per axis, the sorted distinct coordinates and each
/// point's rank among them.
struct RankSpace {
    values: Vec<Vec<f64>>,
    /// `ranks[j][i]` is the rank of point `i` on axis `j`.
    ranks: Vec<Vec<usize>>,
}

impl RankSpace {
    fn new(points: &PointSet) -> Self {
        let d = points.dim();
        let mut values = Vec::with_capacity(d);
        let mut ranks = Vec::with_capacity(d);
        for j in 0..d {
            let mut axis: Vec<f64> = points.iter().map(|p| p[j]).collect();
            axis.sort_by(f64::total_cmp);
            axis.dedup();
            let r = points
                .iter()
                .map(|p| axis.binary_search_by(|v| v.total_cmp(&p[j])).expect("value present"))
                .collect();
            values.push(axis);
            ranks.push(r);
        }
        Self { values, ranks }
    }

    fn groups(&self, axis: usize) -> usize {
        self.values[axis].len()
    }

    fn rectangle(&self, ranges: &[(usize, usize)]) -> Rectangle {
        let lower = ranges.iter().enumerate().map(|(j, r)| self.values[j][r.0]).collect();
        let upper = ranges.iter().enumerate().map(|(j, r)| self.values[j][r.1]).collect();
        Rectangle { lower, upper }
    }

    /// Estimated bucket visits of the exact sweep.
    fn sweep_work(&self) -> f64 {
        let d = self.values.len();
        let slabs: f64 = (0..d - 1)
            .map(|j| {
                let g = self.groups(j) as f64;
                g * (g + 1.0) / 2.0
            })
            .product();
        slabs * self.groups(d - 1) as f64
    }
}

/// Best interval of a sequence of bucket sums: `max |Σ_{a ≤ k ≤ b} bucket[k]|`.
fn best_interval(buckets: &[i64]) -> (u64, usize, usize) {
    let (mut prefix, mut min_s, mut max_s) = (0i64, 0i64, 0i64);
    let (mut min_at, mut max_at) = (0usize, 0usize);
    let (mut best, mut lo, mut hi) = (0u64, 0usize, 0usize);
    for (k, &b) in buckets.iter().enumerate() {
        prefix += b;
        let up = prefix - min_s;
        if up > best as i64 {
            best = up as u64;
            lo = min_at;
            hi = k;
        }
        let down = max_s - prefix;
        if down > best as i64 {
            best = down as u64;
            lo = max_at;
            hi = k;
        }
        if prefix < min_s {
            min_s = prefix;
            min_at = k + 1;
        }
        if prefix > max_s {
            max_s = prefix;
            max_at = k + 1;
        }
    }
    (best, lo, hi)
}

struct Sweep<'a> {
    space: &'a RankSpace,
    signs: &'a [i8],
    best: u64,
    best_ranges: Vec<(usize, usize)>,
    ranges: Vec<(usize, usize)>,
}

impl Sweep<'_> {
    fn dim(&self) -> usize {
        self.space.values.len()
    }

    fn record(&mut self, value: u64, last: (usize, usize)) {
        if value > self.best {
            self.best = value;
            self.best_ranges.clear();
            self.best_ranges.extend_from_slice(&self.ranges);
            self.best_ranges.push(last);
        }
    }

    fn by_rank(&self, axis: usize, active: &[usize]) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.space.groups(axis)];
        for &i in active {
            groups[self.space.ranks[axis][i]].push(i);
        }
        groups
    }

    fn run(&mut self, axis: usize, active: &[usize]) {
        let d = self.dim();
        if (active.len() as u64) <= self.best {
            return;
        }
        if axis == d - 1 {
            let mut buckets = vec![0i64; self.space.groups(axis)];
            for &i in active {
                buckets[self.space.ranks[axis][i]] += self.signs[i] as i64;
            }
            let (value, lo, hi) = best_interval(&buckets);
            self.record(value, (lo, hi));
            return;
        }
        let groups = self.by_rank(axis, active);
        let g = groups.len();
        if axis == d - 2 {
            let last = d - 1;
            let mut buckets = vec![0i64; self.space.groups(last)];
            for a in 0..g {
                if groups[a].is_empty() {
                    continue;
                }
                buckets.iter_mut().for_each(|b| *b = 0);
                let mut count = 0u64;
                for b in a..g {
                    if groups[b].is_empty() {
                        continue;
                    }
                    for &i in &groups[b] {
                        buckets[self.space.ranks[last][i]] += self.signs[i] as i64;
                    }
                    count += groups[b].len() as u64;
                    if count <= self.best {
                        continue;
                    }
                    let (value, lo, hi) = best_interval(&buckets);
                    self.ranges.push((a, b));
                    self.record(value, (lo, hi));
                    self.ranges.pop();
                }
            }
            return;
        }
        let mut slab = Vec::with_capacity(active.len());
        for a in 0..g {
            if groups[a].is_empty() {
                continue;
            }
            slab.clear();
            for b in a..g {
                if groups[b].is_empty() {
                    continue;
                }
                slab.extend_from_slice(&groups[b]);
                self.ranges.push((a, b));
                self.run(axis + 1, &slab);
                self.ranges.pop();
            }
        }
    }
}

fn exact_rectangle_discrepancy(points: &PointSet, chi: &Coloring, space: &RankSpace) -> RectangleDiscrepancy {
    let d = points.dim();
    let all: Vec<usize> = (0..points.len()).collect();
    let mut sweep = Sweep { space, signs: chi.signs(), best: 0, best_ranges: Vec::new(), ranges: Vec::new() };
    sweep.run(0, &all);
    let ranges = if sweep.best_ranges.len() == d {
        sweep.best_ranges
    } else {
        // all-zero sums: any single canonical rectangle is a witness
        let r = &space.ranks;
        (0..d).map(|j| (r[j][0], r[j][0])).collect()
    };
    RectangleDiscrepancy { value: sweep.best, witness: space.rectangle(&ranges), exact: true }
}

/// Inclusion-exclusion prefix sums over the rank grid.
struct PrefixTable {
    shape: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<i32>,
}

impl PrefixTable {
    fn new(space: &RankSpace, signs: &[i8]) -> Option<Self> {
        let shape: Vec<usize> = space.values.iter().map(|v| v.len() + 1).collect();
        let mut cells = 1usize;
        for &s in &shape {
            cells = cells.checked_mul(s).filter(|&c| c <= PREFIX_TABLE_LIMIT)?;
        }
        let d = shape.len();
        let mut strides = vec![1usize; d];
        for j in (0..d - 1).rev() {
            strides[j] = strides[j + 1] * shape[j + 1];
        }
        let mut table = vec![0i32; cells];
        for (i, &s) in signs.iter().enumerate() {
            let cell: usize = (0..d).map(|j| (space.ranks[j][i] + 1) * strides[j]).sum();
            table[cell] += s as i32;
        }
        for j in 0..d {
            for cell in 0..cells {
                if !(cell / strides[j]).is_multiple_of(shape[j]) {
                    table[cell] += table[cell - strides[j]];
                }
            }
        }
        Some(Self { shape, strides, table })
    }

    /// Signed count over ranks `lo_j ..= hi_j` on every axis.
    fn query(&self, ranges: &[(usize, usize)]) -> i64 {
        let d = self.shape.len();
        let mut total = 0i64;
        for mask in 0u32..(1 << d) {
            let mut cell = 0;
            let mut lows = 0;
            for (j, r) in ranges.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    cell += (r.1 + 1) * self.strides[j];
                } else {
                    cell += r.0 * self.strides[j];
                    lows += 1;
                }
            }
            let v = self.table[cell] as i64;
            total += if lows % 2 == 0 { v } else { -v };
        }
        total
    }
}

fn sampled_rectangle_discrepancy(
    points: &PointSet,
    chi: &Coloring,
    space: &RankSpace,
    count: usize,
    seed: u64,
) -> RectangleDiscrepancy {
    let d = points.dim();
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = PrefixTable::new(space, chi.signs());
    let mut ranges = vec![(0usize, 0usize); d];
    let mut best = 0u64;
    let mut best_ranges = (0..d).map(|j| (space.ranks[j][0], space.ranks[j][0])).collect::<Vec<_>>();
    for _ in 0..count {
        for (j, r) in ranges.iter_mut().enumerate() {
            let a = space.ranks[j][rng.random_range(0..n)];
            let b = space.ranks[j][rng.random_range(0..n)];
            *r = (a.min(b), a.max(b));
        }
        let signed = match &table {
            Some(t) => t.query(&ranges),
            None => (0..n)
                .filter(|&i| ranges.iter().enumerate().all(|(j, r)| (r.0..=r.1).contains(&space.ranks[j][i])))
                .map(|i| chi.signs()[i] as i64)
                .sum(),
        };
        let value = signed.unsigned_abs();
        if value > best {
            best = value;
            best_ranges.clone_from(&ranges);
        }
    }
    RectangleDiscrepancy { value: best, witness: space.rectangle(&best_ranges), exact: false }
}

/// Estimated work of the exact sweep for this point set.
pub fn exact_work(points: &PointSet) -> f64 {
    RankSpace::new(points).sweep_work()
}

/// `max_R |Σ_{p ∈ R} χ(p)|` over axis-aligned rectangles.
///
/// Exact mode sweeps all canonical rectangles (faces at point coordinates,
/// which realize every distinct subset) by fixing slabs on the leading axes
/// and solving the last axis as a maximum-interval problem on prefix sums.
pub fn rectangle_discrepancy(points: &PointSet, chi: &Coloring, mode: RectangleMode) -> Result<RectangleDiscrepancy> {
    if chi.len() != points.len() {
        return Err(Error::InvalidInput("coloring length differs from point count"));
    }
    let space = RankSpace::new(points);
    match mode {
        RectangleMode::Exact => {
            let work = space.sweep_work();
            if work > EXACT_WORK_BUDGET {
                return Err(Error::OverBudget { work, budget: EXACT_WORK_BUDGET });
            }
            Ok(exact_rectangle_discrepancy(points, chi, &space))
        }
        RectangleMode::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::InvalidInput("sampled mode needs at least one rectangle"));
            }
            Ok(sampled_rectangle_discrepancy(points, chi, &space, count, seed))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelDiscrepancy {
    pub value: f64,
    pub witness: Vec<f64>,
}

/// `max_c |Σ_p χ(p) K(c, p)|` over the given centers; a lower bound on the
/// sup over all of `ℝ^d`.
pub fn kernel_discrepancy(points: &PointSet, chi: &Coloring, kernel: &Kernel, centers: &PointSet) -> Result<KernelDiscrepancy> {
    if chi.len() != points.len() {
        return Err(Error::InvalidInput("coloring length differs from point count"));
    }
    if centers.dim() != points.dim() {
        return Err(Error::DimensionMismatch { expected: points.dim(), got: centers.dim() });
    }
    let signs = chi.signs();
    let values = par::map_range(centers.len(), |c| {
        let x = centers.point(c);
        points
            .iter()
            .zip(signs)
            .map(|(p, &s)| s as f64 * kernel.eval_unchecked(x, p))
            .collect::<CompensatedSum>()
            .value()
            .abs()
    });
    let best = argmax_with_witness(&values, centers);
    Ok(KernelDiscrepancy { value: values[best], witness: centers.point(best).to_vec() })
}

/// Default centers: `P` plus a grid over its bounding box widened by `3σ`.
pub fn default_centers(points: &PointSet, kernel: &Kernel, grid_resolution: usize) -> Result<PointSet> {
    sup_error_candidates(points, kernel, Some(grid_resolution))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparabilityCheck {
    pub quadrature: f64,
    pub kernel_value: f64,
    pub residual: f64,
}

/// Checks `exp(−‖x − c‖²) = Π_i ∫_0^R 2r e^{−r²} 1(|x_i − c_i| ≤ r) dr` with
/// the midpoint rule (`nodes` per axis, `R = 6`). The integrand is a product
/// over axes, so the tensor midpoint rule equals the product of the per-axis
/// rules.
pub fn gaussian_separability_check(c: &[f64], x: &[f64], nodes: usize) -> Result<SeparabilityCheck> {
    if c.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: c.len(), got: x.len() });
    }
    if c.is_empty() || c.len() > 3 {
        return Err(Error::InvalidInput("separability check supports dimension 1 to 3"));
    }
    if nodes == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one node"));
    }
    let h = SEPARABILITY_RADIUS / nodes as f64;
    let mut quadrature = 1.0;
    for (ci, xi) in c.iter().zip(x) {
        let offset = (xi - ci).abs();
        let axis: CompensatedSum = (0..nodes)
            .map(|k| {
                let r = (k as f64 + 0.5) * h;
                if r >= offset {
                    2.0 * r * libm::exp(-r * r) * h
                } else {
                    0.0
                }
            })
            .collect();
        quadrature *= axis.value();
    }
    let kernel_value = Kernel::gaussian(1.0)?.eval(c, x)?;
    Ok(SeparabilityCheck { quadrature, kernel_value, residual: (quadrature - kernel_value).abs() })
}

/// Alternating signs in sorted order (ties by index). Every interval then
/// holds a signed sum in `{−1, 0, 1}`.
pub fn color_1d(points: &PointSet) -> Result<Coloring> {
    if points.dim() != 1 {
        return Err(Error::InvalidInput("alternating coloring needs one-dimensional points"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points.point(a)[0].total_cmp(&points.point(b)[0]).then(a.cmp(&b)));
    let mut signs = vec![0i8; points.len()];
    for (k, &i) in order.iter().enumerate() {
        signs[i] = if k % 2 == 0 { 1 } else { -1 };
    }
    Coloring::new(points, signs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicColoring {
    pub coloring: Coloring,
    pub discrepancy: u64,
    /// Whether scores are exact rectangle discrepancies (else sampled).
    pub exact: bool,
    /// Score of each random restart, in generation order.
    pub restart_scores: Vec<u64>,
}

/// Best of `restarts` random balanced colorings (exactly `⌊n/2⌋` minus signs)
/// by rectangle discrepancy. In one dimension the alternating coloring joins
/// the pool. Scoring is exact when the sweep fits [`SCORING_WORK_BUDGET`],
/// otherwise `4n²` sampled rectangles shared by all candidates.
pub fn color_heuristic(points: &PointSet, restarts: usize, seed: u64) -> Result<HeuristicColoring> {
    if restarts == 0 {
        return Err(Error::InvalidInput("heuristic coloring needs at least one restart"));
    }
    let n = points.len();
    let space = RankSpace::new(points);
    let exact = space.sweep_work() <= SCORING_WORK_BUDGET;
    let sample_seed = seed ^ 0x5EED_0F4E_C7C7;
    let score = |chi: &Coloring| {
        if exact {
            exact_rectangle_discrepancy(points, chi, &space).value
        } else {
            let count = 4 * n * n;
            sampled_rectangle_discrepancy(points, chi, &space, count, sample_seed).value
        }
    };

    let mut best: Option<(Coloring, u64)> = None;
    if points.dim() == 1 {
        let alt = color_1d(points)?;
        let s = score(&alt);
        best = Some((alt, s));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signs: Vec<i8> = (0..n).map(|i| if i < n / 2 { -1 } else { 1 }).collect();
    let mut restart_scores = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        signs.shuffle(&mut rng);
        let chi = Coloring { signs: signs.clone() };
        let s = score(&chi);
        restart_scores.push(s);
        if best.as_ref().is_none_or(|(_, b)| s < *b) {
            best = Some((chi, s));
        }
    }
    let (coloring, discrepancy) = best.expect("at least one candidate");
    Ok(HeuristicColoring { coloring, discrepancy, exact, restart_scores })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColoringStrategy {
    /// [`color_1d`]; one-dimensional input only.
    Alternating1d,
    /// [`color_heuristic`]; the seed is advanced per halving level.
    Heuristic { restarts: usize, seed: u64 },
}

impl ColoringStrategy {
    fn color(&self, points: &PointSet, level: usize) -> Result<Coloring> {
        match *self {
            ColoringStrategy::Alternating1d => color_1d(points),
            ColoringStrategy::Heuristic { restarts, seed } => {
                Ok(color_heuristic(points, restarts, seed.wrapping_add(level as u64))?.coloring)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalvingLevel {
    pub input_size: usize,
    pub retained_size: usize,
    /// Measured kernel discrepancy over the default centers (a lower bound).
    pub kernel_discrepancy: f64,
    /// Exact rectangle discrepancy, when the sweep fits the budget.
    pub rectangle_discrepancy: Option<u64>,
    /// Discrepancy charged to this level: the exact rectangle discrepancy when
    /// known, otherwise the measured kernel discrepancy.
    pub discrepancy: f64,
    /// `(discrepancy + retained − dropped) / input_size`.
    pub error_bound: f64,
    /// True when the bound holds on all of `ℝ^d`, not only on the centers.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalvingReport {
    pub levels: Vec<HalvingLevel>,
    pub total_bound: f64,
    pub certified: bool,
}

/// Candidate-grid resolution used for kernel discrepancy during halving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingOptions {
    pub grid_resolution: usize,
}

impl Default for HalvingOptions {
    fn default() -> Self {
        Self { grid_resolution: 16 }
    }
}

fn require_gaussian(kernel: &Kernel) -> Result<()> {
    if kernel.family() != KernelFamily::Gaussian {
        return Err(Error::UnsupportedKernel {
            family: kernel.family().name(),
            reason: "halving relies on the Gaussian rectangle decomposition",
        });
    }
    Ok(())
}

/// Colors `points` and keeps the class of size `⌈n/2⌉` (the `+1` class on a
/// tie). Returns the retained indices (increasing) and the level record.
///
/// With retained class `A` (size `a`) and dropped class `B` (size `b ≤ a`),
/// `kde_P − kde_A = (1/n)(Σ_B K − (b/a) Σ_A K)`, so the change is at most
/// `(D + a − b)/n` where `D` bounds `|Σ_A K − Σ_B K|`.
pub fn halve(
    points: &PointSet,
    kernel: &Kernel,
    strategy: &ColoringStrategy,
    options: &HalvingOptions,
) -> Result<(Vec<usize>, HalvingLevel)> {
    halve_level(points, kernel, strategy, options, 0)
}

fn halve_level(
    points: &PointSet,
    kernel: &Kernel,
    strategy: &ColoringStrategy,
    options: &HalvingOptions,
    level: usize,
) -> Result<(Vec<usize>, HalvingLevel)> {
    require_gaussian(kernel)?;
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput("halving needs at least two points"));
    }
    let chi = strategy.color(points, level)?;
    if chi.balance().abs() > 1 {
        return Err(Error::InvalidInput("halving needs a balanced coloring"));
    }
    let plus = chi.plus_count();
    let keep: i8 = if 2 * plus >= n { 1 } else { -1 };
    let retained: Vec<usize> = (0..n).filter(|&i| chi.signs()[i] == keep).collect();
    let imbalance = (2 * retained.len() - n) as f64;

    let centers = default_centers(points, kernel, options.grid_resolution)
        .or_else(|_| sup_error_candidates(points, kernel, None))?;
    let kd = kernel_discrepancy(points, &chi, kernel, &centers)?;
    let rect = match rectangle_discrepancy(points, &chi, RectangleMode::Exact) {
        Ok(r) => Some(r.value),
        Err(Error::OverBudget { .. }) => None,
        Err(e) => return Err(e),
    };
    let discrepancy = rect.map_or(kd.value, |r| r as f64);
    let record = HalvingLevel {
        input_size: n,
        retained_size: retained.len(),
        kernel_discrepancy: kd.value,
        rectangle_discrepancy: rect,
        discrepancy,
        error_bound: (discrepancy + imbalance) / n as f64,
        certified: rect.is_some(),
    };
    Ok((retained, record))
}

/// Halves greedily while the accumulated bound plus the next level's bound
/// stays within `epsilon`. The bound adds up because the per-level changes
/// telescope to `kde_P − kde_Q`.
pub fn halving_coreset(
    points: &PointSet,
    kernel: &Kernel,
    epsilon: f64,
    strategy: &ColoringStrategy,
    options: &HalvingOptions,
) -> Result<(Coreset, HalvingReport)> {
    require_gaussian(kernel)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::OutOfRange { what: "epsilon", value: epsilon });
    }
    let mut current: Vec<usize> = (0..points.len()).collect();
    let mut levels = Vec::new();
    let mut total = 0.0;
    while current.len() >= 2 {
        let subset = points.select(&current)?;
        let (retained, record) = halve_level(&subset, kernel, strategy, options, levels.len())?;
        if total + record.error_bound > epsilon {
            break;
        }
        total += record.error_bound;
        current = retained.into_iter().map(|i| current[i]).collect();
        levels.push(record);
    }
    let certified = levels.iter().all(|l| l.certified);
    let coreset = Coreset::new(points, current, None)?;
    Ok((coreset, HalvingReport { levels, total_bound: total, certified }))
}
