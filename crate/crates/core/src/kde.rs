//! Exact kernel density estimates, set similarity `κ`, the kernel distance
//! `D_K` and empirical L∞ error between a point set and a coreset.
//!
//! For a characteristic kernel with `K(x, x) = 1` the kernel distance bounds
//! the L∞ error from above (`|kde_P(x) − kde_Q(x)| ≤ D_K(P, Q)` for every `x`),
//! and any candidate-set maximum bounds it from below. [`evaluate_error`]
//! reports both so the pair brackets the true sup.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::par;
use crate::points::{Measure, PointSet};
use crate::sum::CompensatedSum;

/// Radicands of `D_K²` above this are clamped to zero.
pub const NEGATIVE_RESIDUE_TOLERANCE: f64 = 1e-9;

/// Widest dimension for which a candidate grid is generated.
pub const MAX_GRID_DIM: usize = 6;

/// Upper limit on the number of grid candidates.
pub const MAX_GRID_POINTS: usize = 10_000_000;

/// Grid margin around the bounding box, in bandwidths.
pub const GRID_MARGIN_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `max_x |kde_P(x) − kde_Q(x)|` over the candidates; a lower bound on the L∞ error.
    pub sup_error_estimate: f64,
    pub witness_point: Vec<f64>,
    /// `D_K(P, Q)`; an upper bound on the L∞ error for characteristic kernels.
    pub rkhs_gap: f64,
    pub candidate_count: usize,
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[inline]
pub(crate) fn kde_unchecked<M: Measure + ?Sized>(set: &M, kernel: &Kernel, x: &[f64]) -> f64 {
    (0..set.len())
        .map(|i| set.weight(i) * kernel.eval_unchecked(x, set.point(i)))
        .collect::<CompensatedSum>()
        .value()
}

/// `kde_P(x) = Σ_p w(p) K(x, p)`; uniform weights for a plain [`PointSet`].
pub fn kde<M: Measure + ?Sized>(set: &M, kernel: &Kernel, x: &[f64]) -> Result<f64> {
    check_dim(set.dim(), x.len())?;
    Ok(kde_unchecked(set, kernel, x))
}

/// `κ(P, Q) = Σ_p Σ_q w(p) w(q) K(p, q)`.
pub fn similarity<A, B>(a: &A, b: &B, kernel: &Kernel) -> Result<f64>
where
    A: Measure + ?Sized,
    B: Measure + ?Sized,
{
    check_dim(a.dim(), b.dim())?;
    Ok(similarity_unchecked(a, b, kernel))
}

pub(crate) fn similarity_unchecked<A, B>(a: &A, b: &B, kernel: &Kernel) -> f64
where
    A: Measure + ?Sized,
    B: Measure + ?Sized,
{
    let rows = par::map_range(a.len(), |i| a.weight(i) * kde_unchecked(b, kernel, a.point(i)));
    rows.into_iter().collect::<CompensatedSum>().value()
}

/// Clamps tiny negative float residue and rejects anything larger.
pub(crate) fn clamp_residue(what: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEGATIVE_RESIDUE_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::NegativeResidue { what, value })
    }
}

/// `D_K(P, Q) = √(κ(P,P) + κ(Q,Q) − 2κ(P,Q)) = ‖μ̂_P − μ̂_Q‖_H`.
///
/// The value is only a metric for characteristic kernels; for the others it is
/// still computed when the radicand is non-negative.
pub fn kernel_distance<A, B>(a: &A, b: &B, kernel: &Kernel) -> Result<f64>
where
    A: Measure + ?Sized,
    B: Measure + ?Sized,
{
    check_dim(a.dim(), b.dim())?;
    let radicand = similarity_unchecked(a, a, kernel) + similarity_unchecked(b, b, kernel)
        - 2.0 * similarity_unchecked(a, b, kernel);
    Ok(libm::sqrt(clamp_residue("kernel distance radicand", radicand)?))
}

fn grid_axis(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    if resolution == 1 {
        return alloc::vec![0.5 * (lo + hi)];
    }
    let last = (resolution - 1) as f64;
    (0..resolution).map(|i| lo + (hi - lo) * (i as f64 / last)).collect()
}

/// Regular grid with `resolution` points per axis over the given box.
pub fn grid_over_box(lower: &[f64], upper: &[f64], resolution: usize) -> Result<PointSet> {
    let dim = lower.len();
    if resolution == 0 {
        return Err(Error::InvalidInput("grid resolution must be at least 1"));
    }
    if dim > MAX_GRID_DIM {
        return Err(Error::InvalidInput("grid candidates need dimension <= 6; use point-only candidates"));
    }
    let total = resolution
        .checked_pow(dim as u32)
        .filter(|&t| t <= MAX_GRID_POINTS)
        .ok_or(Error::InvalidInput("candidate grid too large"))?;
    let axes: Vec<Vec<f64>> = (0..dim).map(|j| grid_axis(lower[j], upper[j], resolution)).collect();
    let mut coords = Vec::with_capacity(total * dim);
    let mut digits = alloc::vec![0usize; dim];
    for _ in 0..total {
        coords.extend(digits.iter().enumerate().map(|(j, &k)| axes[j][k]));
        for digit in digits.iter_mut().rev() {
            *digit += 1;
            if *digit < resolution {
                break;
            }
            *digit = 0;
        }
    }
    PointSet::from_flat(coords, dim)
}

/// Candidate locations for the L∞ error: all of `P`, plus (when
/// `grid_resolution` is given) a grid over the bounding box of `P` widened by
/// `3σ` on each side.
pub fn sup_error_candidates(points: &PointSet, kernel: &Kernel, grid_resolution: Option<usize>) -> Result<PointSet> {
    let Some(resolution) = grid_resolution else {
        return Ok(points.clone());
    };
    let margin = GRID_MARGIN_SIGMAS * kernel.bandwidth();
    let (lo, hi) = points.bounding_box();
    let lower: Vec<f64> = lo.iter().map(|v| v - margin).collect();
    let upper: Vec<f64> = hi.iter().map(|v| v + margin).collect();
    let grid = grid_over_box(&lower, &upper, resolution)?;
    let mut coords = points.as_flat().to_vec();
    coords.extend_from_slice(grid.as_flat());
    PointSet::from_flat(coords, points.dim())
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Index of the largest value; ties go to the lexicographically smallest point.
pub(crate) fn argmax_with_witness(values: &[f64], points: &PointSet) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        let better = match values[i].total_cmp(&values[best]) {
            Ordering::Greater => true,
            Ordering::Equal => lex_cmp(points.point(i), points.point(best)) == Ordering::Less,
            Ordering::Less => false,
        };
        if better {
            best = i;
        }
    }
    best
}

/// `max_{x ∈ candidates} |kde_P(x) − kde_Q(x)|` and the index of its witness.
pub fn max_abs_difference<A, B>(a: &A, b: &B, kernel: &Kernel, candidates: &PointSet) -> Result<(f64, usize)>
where
    A: Measure + ?Sized,
    B: Measure + ?Sized,
{
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), candidates.dim())?;
    let diffs = par::map_range(candidates.len(), |c| {
        let x = candidates.point(c);
        (kde_unchecked(a, kernel, x) - kde_unchecked(b, kernel, x)).abs()
    });
    let best = argmax_with_witness(&diffs, candidates);
    Ok((diffs[best], best))
}

/// Brackets the L∞ error between `P` and `Q`: a candidate maximum from below
/// and the kernel distance from above.
pub fn evaluate_error<A, B>(a: &A, b: &B, kernel: &Kernel, candidates: &PointSet) -> Result<ErrorReport>
where
    A: Measure + ?Sized,
    B: Measure + ?Sized,
{
    let (sup, witness) = max_abs_difference(a, b, kernel, candidates)?;
    Ok(ErrorReport {
        sup_error_estimate: sup,
        witness_point: candidates.point(witness).to_vec(),
        rkhs_gap: kernel_distance(a, b, kernel)?,
        candidate_count: candidates.len(),
    })
}
