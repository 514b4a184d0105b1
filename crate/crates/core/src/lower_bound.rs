//! Lower-bound construction on the scaled canonical basis.
//!
//! `P = {p_i = (z_f/√2) e_i : i = 1..n} ⊂ ℝⁿ` and, by symmetry, `Q = {p_1..p_k}`.
//! The witness `p` lies on the line through the centroids `p̄` and `p̄_k`,
//! beyond `p̄_k` at distance `z_f/√2`. Every point of `Q` sits at distance
//! `l₁` from `p`, every other point at `l₂ > l₁`, so
//! `kde_Q(p) − kde_P(p) = (1 − k/n)(f(l₁) − f(l₂))`.
//!
//! Everything here is closed form; [`materialize`] builds the explicit
//! geometry for cross-checks.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelFamily};
use crate::par;
use crate::points::PointSet;

/// Largest `n` accepted by [`materialize`] (`n²` coordinates).
pub const MATERIALIZE_LIMIT: usize = 4096;

/// Slack granted to certificate comparisons.
pub const CERTIFICATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbConstruction {
    n: usize,
    k: usize,
    z_f: f64,
    r_f: f64,
    kernel: Kernel,
}

impl LbConstruction {
    pub fn new(n: usize, k: usize, z_f: f64, r_f: f64, kernel: Kernel) -> Result<Self> {
        check_nk(n, k)?;
        check_window(z_f, r_f)?;
        Ok(Self { n, k, z_f, r_f, kernel })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn z_f(&self) -> f64 {
        self.z_f
    }

    pub fn r_f(&self) -> f64 {
        self.r_f
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn l1_l2(&self) -> (f64, f64) {
        distances(self.n, self.k, self.z_f)
    }

    pub fn witness_gap(&self) -> f64 {
        gap_unchecked(self.n, self.k, self.z_f, &self.kernel)
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::OutOfRange { what: "n", value: n as f64 });
    }
    if k == 0 || k >= n {
        return Err(Error::OutOfRange { what: "k", value: k as f64 });
    }
    Ok(())
}

fn check_window(z_f: f64, r_f: f64) -> Result<()> {
    if !(z_f > 0.0 && z_f.is_finite()) {
        return Err(Error::OutOfRange { what: "z_f", value: z_f });
    }
    if !(r_f > 0.0 && r_f < z_f) {
        return Err(Error::OutOfRange { what: "r_f", value: r_f });
    }
    Ok(())
}

fn distances(n: usize, k: usize, z_f: f64) -> (f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    let half = z_f * z_f / 2.0;
    let l1_sq = z_f * z_f - z_f * z_f / (2.0 * kf);
    let inner = 1.0 + libm::sqrt(1.0 / kf - 1.0 / nf) + libm::sqrt(1.0 / (nf - kf) - 1.0 / nf);
    let l2_sq = half * inner * inner + half * (1.0 - 1.0 / (nf - kf));
    (libm::sqrt(l1_sq), libm::sqrt(l2_sq))
}

fn gap_unchecked(n: usize, k: usize, z_f: f64, kernel: &Kernel) -> f64 {
    let (l1, l2) = distances(n, k, z_f);
    (1.0 - k as f64 / n as f64) * (kernel.profile_unchecked(l1) - kernel.profile_unchecked(l2))
}

/// Distances `(l₁, l₂)` from the witness to points inside and outside `Q`.
pub fn l1_l2(n: usize, k: usize, z_f: f64) -> Result<(f64, f64)> {
    check_nk(n, k)?;
    if !(z_f > 0.0 && z_f.is_finite()) {
        return Err(Error::OutOfRange { what: "z_f", value: z_f });
    }
    Ok(distances(n, k, z_f))
}

/// `(kde_Q − kde_P)(p) = (1 − k/n)(f(l₁) − f(l₂))`; zero when `k = n`.
pub fn witness_gap(n: usize, k: usize, z_f: f64, kernel: &Kernel) -> Result<f64> {
    if k == n && n >= 1 {
        return Ok(0.0);
    }
    l1_l2(n, k, z_f)?;
    Ok(gap_unchecked(n, k, z_f, kernel))
}

/// The two constants shaping the admissible interval:
/// `(4z_f²/(2z_f r_f + r_f²))²` and `z_f²/(2(2z_f r_f − r_f²))`.
pub fn interval_terms(z_f: f64, r_f: f64) -> Result<(f64, f64)> {
    check_window(z_f, r_f)?;
    let outer = 2.0 * z_f * r_f + r_f * r_f;
    // one rounding for the quotient, so 16/1.5625 lands exactly on 10.24
    let square = 16.0 * z_f * z_f * z_f * z_f / (outer * outer);
    let inner = z_f * z_f / (2.0 * (2.0 * z_f * r_f - r_f * r_f));
    Ok((square, inner))
}

/// Inclusive range of subset sizes; empty when `k_min > k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub k_min: usize,
    pub k_max: usize,
}

impl KRange {
    pub fn is_empty(&self) -> bool {
        self.k_min > self.k_max
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.k_max - self.k_min + 1
        }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.k_min <= k && k <= self.k_max
    }

    pub fn iter(&self) -> core::ops::RangeInclusive<usize> {
        self.k_min..=self.k_max
    }
}

/// Sizes `k` for which `l₁ ∈ (z_f − r_f, z_f)` and `l₂ ∈ (z_f, z_f + r_f)`.
pub fn admissible_k_range(n: usize, z_f: f64, r_f: f64) -> Result<KRange> {
    if n < 2 {
        return Err(Error::OutOfRange { what: "n", value: n as f64 });
    }
    let (square, inner) = interval_terms(z_f, r_f)?;
    let lower = square.max(inner).max(1.0);
    let upper = ((n - 1) as f64).min(n as f64 - square);
    let k_min = libm::ceil(lower) as usize;
    let k_max = if upper < 1.0 { 0 } else { libm::floor(upper) as usize };
    Ok(KRange { k_min, k_max })
}

/// Per-kernel default window: `z_f = σ` (Gaussian, Laplace, ball),
/// `z_f = σ/2` (triangle, Epanechnikov), with `r_f = z_f/2`.
pub fn default_window(kernel: &Kernel) -> (f64, f64) {
    let s = kernel.bandwidth();
    let z_f = match kernel.family() {
        KernelFamily::Gaussian | KernelFamily::Laplace | KernelFamily::Ball => s,
        KernelFamily::Triangle | KernelFamily::Epanechnikov => s / 2.0,
    };
    (z_f, z_f / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub k: usize,
    pub l1: f64,
    pub l2: f64,
    /// The witness gap.
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn require_admissible(n: usize, k: usize, z_f: f64, r_f: f64) -> Result<()> {
    check_nk(n, k)?;
    if !admissible_k_range(n, z_f, r_f)?.contains(k) {
        return Err(Error::Hypothesis("k lies outside the interval-lemma range"));
    }
    Ok(())
}

fn certificate(n: usize, k: usize, z_f: f64, kernel: &Kernel, rhs: f64) -> Certificate {
    let (l1, l2) = distances(n, k, z_f);
    let lhs = gap_unchecked(n, k, z_f, kernel);
    Certificate { k, l1, l2, lhs, rhs, holds: lhs >= rhs - CERTIFICATE_SLACK }
}

/// Steep-kernel bound: `gap ≥ (c_f z_f / 3) √(1/(2k))` for admissible
/// `k ≤ n/2`.
pub fn steep_bound_certificate(n: usize, k: usize, z_f: f64, r_f: f64, kernel: &Kernel) -> Result<Certificate> {
    require_admissible(n, k, z_f, r_f)?;
    if 2 * k > n {
        return Err(Error::Hypothesis("steep bound assumes k <= n/2"));
    }
    let window = kernel.steepness_constant(z_f, r_f)?;
    Ok(certificate(n, k, z_f, kernel, steep_rhs(window.c_f, z_f, k)))
}

/// `(c_f z_f / 3) √(1/(2k))`.
pub fn steep_rhs(c_f: f64, z_f: f64, k: usize) -> f64 {
    c_f * z_f / 3.0 * libm::sqrt(1.0 / (2.0 * k as f64))
}

/// Drop-kernel bound: `gap ≥ (1 − k/n) c_f` for admissible `k`.
pub fn drop_bound_certificate(n: usize, k: usize, z_f: f64, r_f: f64, kernel: &Kernel) -> Result<Certificate> {
    require_admissible(n, k, z_f, r_f)?;
    let window = kernel.drop_constant(z_f, r_f)?;
    let rhs = (1.0 - k as f64 / n as f64) * window.c_f;
    Ok(certificate(n, k, z_f, kernel, rhs))
}

/// Certificates for every admissible `k`: the drop bound for the ball kernel,
/// otherwise the steep bound restricted to `k ≤ n/2`.
pub fn certificate_sweep(n: usize, z_f: f64, r_f: f64, kernel: &Kernel) -> Result<Vec<Certificate>> {
    let range = admissible_k_range(n, z_f, r_f)?;
    if range.is_empty() {
        return Ok(Vec::new());
    }
    let k_max = if kernel.family() == KernelFamily::Ball { range.k_max } else { range.k_max.min(n / 2) };
    if k_max < range.k_min {
        return Ok(Vec::new());
    }
    let ks: Vec<usize> = (range.k_min..=k_max).collect();
    let ball = kernel.family() == KernelFamily::Ball;
    let rows = par::map_range(ks.len(), |i| {
        if ball {
            drop_bound_certificate(n, ks[i], z_f, r_f, kernel)
        } else {
            steep_bound_certificate(n, ks[i], z_f, r_f, kernel)
        }
    });
    rows.into_iter().collect()
}

/// Size below which the steep certificate forces error above `epsilon`:
/// solving `(c_f z_f / 3) √(1/(2k)) = ε` gives `k = (c_f z_f/(3ε))²/2`.
pub fn steep_size_threshold(c_f: f64, z_f: f64, epsilon: f64) -> f64 {
    let a = c_f * z_f / (3.0 * epsilon);
    a * a / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalSize {
    /// Smallest certified `k` whose witness gap is at most `epsilon`.
    pub k: usize,
    pub gap: f64,
    /// Size the certificate proves necessary.
    pub threshold: f64,
}

/// Smallest subset size on the construction that reaches error `epsilon`
/// at the witness, among the certified sizes of [`certificate_sweep`].
/// `None` when no certified size gets that low.
pub fn minimal_size(n: usize, z_f: f64, r_f: f64, kernel: &Kernel, epsilon: f64) -> Result<Option<MinimalSize>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange { what: "epsilon", value: epsilon });
    }
    let threshold = if kernel.family() == KernelFamily::Ball {
        let c_f = kernel.drop_constant(z_f, r_f)?.c_f;
        n as f64 * (1.0 - epsilon / c_f)
    } else {
        steep_size_threshold(kernel.steepness_constant(z_f, r_f)?.c_f, z_f, epsilon)
    };
    let rows = certificate_sweep(n, z_f, r_f, kernel)?;
    Ok(rows
        .iter()
        .find(|c| c.lhs <= epsilon)
        .map(|c| MinimalSize { k: c.k, gap: c.lhs, threshold }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    pub points: PointSet,
    pub witness: Vec<f64>,
    pub centroid: Vec<f64>,
    pub subset_centroid: Vec<f64>,
}

/// Explicit coordinates of the construction in `ℝⁿ`.
pub fn materialize(construction: &LbConstruction) -> Result<Materialized> {
    let (n, k, z_f) = (construction.n, construction.k, construction.z_f);
    if n > MATERIALIZE_LIMIT {
        return Err(Error::OutOfRange { what: "n", value: n as f64 });
    }
    let scale = z_f / libm::sqrt(2.0);
    let mut coords = vec![0.0; n * n];
    for i in 0..n {
        coords[i * n + i] = scale;
    }
    let points = PointSet::from_flat(coords, n)?;
    let centroid = vec![scale / n as f64; n];
    let subset_centroid: Vec<f64> = (0..n).map(|j| if j < k { scale / k as f64 } else { 0.0 }).collect();
    let direction: Vec<f64> = subset_centroid.iter().zip(&centroid).map(|(a, b)| a - b).collect();
    let norm = libm::sqrt(direction.iter().map(|v| v * v).sum::<f64>());
    let witness = subset_centroid.iter().zip(&direction).map(|(c, v)| c + scale * v / norm).collect();
    Ok(Materialized { points, witness, centroid, subset_centroid })
}
