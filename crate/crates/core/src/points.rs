//! Point sets, coresets and weighted views over them.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{sq_dist, Kernel};

/// An immutable set of `n ≥ 1` points in `ℝ^d`, stored row-major.
///
/// Index order is stable; coresets and colorings refer to points by index.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from row-major coordinates.
    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("points must have dimension >= 1"));
        }
        if coords.is_empty() {
            return Err(Error::InvalidInput("point set must contain at least one point"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput("coordinate count is not a multiple of the dimension"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coordinates must be finite"));
        }
        let mut lower = coords[..dim].to_vec();
        let mut upper = lower.clone();
        for row in coords.chunks_exact(dim) {
            for (j, &c) in row.iter().enumerate() {
                lower[j] = lower[j].min(c);
                upper[j] = upper[j].max(c);
            }
        }
        Ok(Self { coords, dim, lower, upper })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(coords, dim)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Per-coordinate minimum and maximum.
    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    /// `Δ = (1/σ) · max_{p, p'} ‖p − p'‖`, computed in O(n²).
    pub fn diameter_over_sigma(&self, kernel: &Kernel) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(sq_dist(self.point(i), self.point(j)));
            }
        }
        libm::sqrt(best) / kernel.bandwidth()
    }

    /// Points selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::OutOfRange { what: "index", value: i as f64 });
            }
            coords.extend_from_slice(self.point(i));
        }
        Self::from_flat(coords, self.dim)
    }

    /// Coordinates divided by `factor` (used to move to unit bandwidth).
    pub fn scaled(&self, factor: f64) -> Self {
        let coords = self.coords.iter().map(|c| c / factor).collect();
        Self::from_flat(coords, self.dim).expect("scaling preserves validity")
    }
}

/// A subset of a parent [`PointSet`], by strictly increasing indices, with
/// optional weights summing to one. Without weights every point counts `1/|Q|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coreset {
    parent_len: usize,
    indices: Vec<usize>,
    weights: Option<Vec<f64>>,
}

impl Coreset {
    pub fn new(parent: &PointSet, indices: Vec<usize>, weights: Option<Vec<f64>>) -> Result<Self> {
        Self::with_parent_len(parent.len(), indices, weights)
    }

    pub fn with_parent_len(parent_len: usize, indices: Vec<usize>, weights: Option<Vec<f64>>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("coreset must select at least one point"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("coreset indices must be strictly increasing"));
        }
        if let Some(&last) = indices.last() {
            if last >= parent_len {
                return Err(Error::OutOfRange { what: "coreset index", value: last as f64 });
            }
        }
        if let Some(w) = &weights {
            if w.len() != indices.len() {
                return Err(Error::InvalidInput("weights and indices differ in length"));
            }
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidInput("weights must be finite and non-negative"));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::OutOfRange { what: "weight sum", value: total });
            }
        }
        Ok(Self { parent_len, indices, weights })
    }

    /// Every point of the parent, unweighted.
    pub fn full(parent: &PointSet) -> Self {
        Self { parent_len: parent.len(), indices: (0..parent.len()).collect(), weights: None }
    }

    /// Collapses a multiset of selections into distinct indices weighted by
    /// multiplicity. Equal multiplicities give an unweighted coreset.
    pub fn from_multiset(parent: &PointSet, selections: &[usize]) -> Result<Self> {
        if selections.is_empty() {
            return Err(Error::InvalidInput("coreset must select at least one point"));
        }
        let mut sorted = selections.to_vec();
        sorted.sort_unstable();
        let mut indices = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for i in sorted {
            if indices.last() == Some(&i) {
                *counts.last_mut().unwrap() += 1;
            } else {
                indices.push(i);
                counts.push(1);
            }
        }
        let uniform = counts.iter().all(|&c| c == counts[0]);
        let weights = if uniform {
            None
        } else {
            let total = selections.len() as f64;
            Some(counts.iter().map(|&c| c as f64 / total).collect())
        };
        Self::new(parent, indices, weights)
    }

    pub fn parent_len(&self) -> usize {
        self.parent_len
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        match &self.weights {
            Some(w) => w[k],
            None => 1.0 / self.indices.len() as f64,
        }
    }

    /// Binds the coreset to its parent for evaluation.
    pub fn view<'a>(&'a self, parent: &'a PointSet) -> Result<CoresetView<'a>> {
        if parent.len() != self.parent_len {
            return Err(Error::InvalidInput("coreset does not belong to this point set"));
        }
        Ok(CoresetView { parent, coreset: self })
    }
}

/// A [`Coreset`] together with the points it indexes.
#[derive(Debug, Clone, Copy)]
pub struct CoresetView<'a> {
    parent: &'a PointSet,
    coreset: &'a Coreset,
}

/// A finite weighted point collection; the kernel mean of a measure is
/// `Σ_i weight(i) · φ(point(i))`.
pub trait Measure: Sync {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn point(&self, i: usize) -> &[f64];
    fn weight(&self, i: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Measure for PointSet {
    fn len(&self) -> usize {
        PointSet::len(self)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        PointSet::point(self, i)
    }

    #[inline]
    fn weight(&self, _: usize) -> f64 {
        1.0 / PointSet::len(self) as f64
    }
}

impl Measure for CoresetView<'_> {
    fn len(&self) -> usize {
        self.coreset.len()
    }

    fn dim(&self) -> usize {
        self.parent.dim()
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        self.parent.point(self.coreset.indices[i])
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.coreset.weight(i)
    }
}

/// Explicitly weighted points, e.g. grid-snapped lattice points with
/// multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPoints {
    points: PointSet,
    weights: Vec<f64>,
}

impl WeightedPoints {
    pub fn new(points: PointSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::InvalidInput("weights and points differ in length"));
        }
        if weights.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange { what: "weight sum", value: total });
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Measure for WeightedPoints {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn dim(&self) -> usize {
        self.points.dim()
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        self.points.point(i)
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_flat(xs.to_vec(), 1).unwrap()
    }

    #[test]
    fn rejects_malformed_point_sets() {
        assert!(PointSet::from_flat(vec![], 2).is_err());
        assert!(PointSet::from_flat(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(PointSet::from_flat(vec![1.0, f64::NAN], 2).is_err());
        assert!(PointSet::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn bounding_box_and_diameter() {
        let p = PointSet::from_rows(&[[0.0, 1.0], [3.0, -1.0], [1.0, 5.0]]).unwrap();
        assert_eq!(p.bounding_box(), (&[0.0, -1.0][..], &[3.0, 5.0][..]));
        let k = Kernel::gaussian(2.0).unwrap();
        assert!((p.diameter_over_sigma(&k) - (4.0f64 + 36.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn coreset_validation() {
        let p = line(&[0.0, 1.0, 2.0]);
        assert!(Coreset::new(&p, vec![], None).is_err());
        assert!(Coreset::new(&p, vec![1, 1], None).is_err());
        assert!(Coreset::new(&p, vec![2, 1], None).is_err());
        assert!(Coreset::new(&p, vec![0, 3], None).is_err());
        assert!(Coreset::new(&p, vec![0, 1], Some(vec![0.5])).is_err());
        assert!(Coreset::new(&p, vec![0, 1], Some(vec![0.5, 0.6])).is_err());
        assert!(Coreset::new(&p, vec![0, 1], Some(vec![0.25, 0.75])).is_ok());
    }

    #[test]
    fn multiset_weights_follow_multiplicity() {
        let p = line(&[0.0, 1.0, 2.0]);
        let q = Coreset::from_multiset(&p, &[2, 0, 2, 2]).unwrap();
        assert_eq!(q.indices(), &[0, 2]);
        assert_eq!(q.weights(), Some(&[0.25, 0.75][..]));
        let u = Coreset::from_multiset(&p, &[1, 0, 0, 1]).unwrap();
        assert_eq!(u.weights(), None);
        assert_eq!(u.weight(0), 0.5);
    }

    #[test]
    fn view_checks_parent() {
        let p = line(&[0.0, 1.0, 2.0]);
        let other = line(&[0.0, 1.0]);
        let q = Coreset::new(&p, vec![1], None).unwrap();
        assert!(q.view(&other).is_err());
        let v = q.view(&p).unwrap();
        assert_eq!(Measure::point(&v, 0), &[1.0]);
        assert_eq!(Measure::weight(&v, 0), 1.0);
    }
}
