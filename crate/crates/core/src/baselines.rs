//! Reference coreset constructions: uniform sampling, evenly spaced selection
//! in one dimension, and snapping to a lattice.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::points::{Coreset, PointSet, WeightedPoints};

fn check_size(points: &PointSet, m: usize) -> Result<()> {
    if m == 0 || m > points.len() {
        return Err(Error::OutOfRange { what: "coreset size", value: m as f64 });
    }
    Ok(())
}

/// `m` distinct indices drawn uniformly at random (ChaCha8 seeded by `seed`).
pub fn random_sample(points: &PointSet, m: usize, seed: u64) -> Result<Coreset> {
    check_size(points, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut rng, points.len(), m).into_vec();
    indices.sort_unstable();
    Coreset::new(points, indices, None)
}

/// `⌈(1/ε²)(d + ln(1/δ))⌉`, the usual sample size for error `ε` with failure
/// probability `δ`.
pub fn sample_size(epsilon: f64, dim: usize, delta: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange { what: "epsilon", value: epsilon });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    Ok(libm::ceil((dim as f64 + libm::log(1.0 / delta)) / (epsilon * epsilon)) as usize)
}

/// Splits the sorted order into `m` blocks of (near) equal cardinality and
/// keeps each block's lower median.
pub fn sorted_1d(points: &PointSet, m: usize) -> Result<Coreset> {
    if points.dim() != 1 {
        return Err(Error::InvalidInput("sorted selection needs one-dimensional points"));
    }
    check_size(points, m)?;
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points.point(a)[0].total_cmp(&points.point(b)[0]).then(a.cmp(&b)));
    let mut indices: Vec<usize> = (0..m)
        .map(|b| {
            let (start, end) = (b * n / m, (b + 1) * n / m);
            order[start + (end - start - 1) / 2]
        })
        .collect();
    indices.sort_unstable();
    Coreset::new(points, indices, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSnap {
    /// Distinct lattice points weighted by the fraction of `P` snapped there.
    pub snapped: WeightedPoints,
    pub cell_width: f64,
    /// Largest distance any point moved.
    pub max_move: f64,
}

/// Rounds every point to the lattice `wℤ^d` with `w = ε/(C√d)`, `C` the
/// kernel's Lipschitz constant. Each point moves at most `w√d/2 = ε/(2C)`,
/// so the estimate changes by at most `ε/2` everywhere.
pub fn grid_snap(points: &PointSet, kernel: &Kernel, epsilon: f64) -> Result<GridSnap> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange { what: "epsilon", value: epsilon });
    }
    let lipschitz = kernel.lipschitz_constant()?;
    let d = points.dim();
    let width = epsilon / (lipschitz * libm::sqrt(d as f64));
    let mut cells: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut max_move_sq: f64 = 0.0;
    for p in points.iter() {
        let key: Vec<i64> = p.iter().map(|&c| libm::round(c / width) as i64).collect();
        let moved: f64 = p.iter().zip(&key).map(|(&c, &k)| (c - k as f64 * width) * (c - k as f64 * width)).sum();
        max_move_sq = max_move_sq.max(moved);
        *cells.entry(key).or_insert(0) += 1;
    }
    let n = points.len() as f64;
    let mut coords = Vec::with_capacity(cells.len() * d);
    let mut weights = Vec::with_capacity(cells.len());
    for (key, count) in cells {
        coords.extend(key.iter().map(|&k| k as f64 * width));
        weights.push(count as f64 / n);
    }
    let snapped = WeightedPoints::new(PointSet::from_flat(coords, d)?, weights)?;
    Ok(GridSnap { snapped, cell_width: width, max_move: libm::sqrt(max_move_sq) })
}
