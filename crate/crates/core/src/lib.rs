//! Coresets for kernel density estimates.
//!
//! A kernel density estimate of a point set `P` is the function
//! `kde_P(x) = (1/|P|) Σ_p K(x, p)`. This crate builds small subsets `Q ⊂ P`
//! whose estimate stays uniformly close to the original, and computes the
//! quantities that certify how close:
//!
//! - [`herding`]: kernel herding (Frank-Wolfe on the kernel mean) with an exact
//!   running gap `‖x_t − μ‖²` that never exceeds `2/t`.
//! - [`discrepancy`]: rectangle and kernel discrepancy of ±1 colorings, and
//!   halving coresets for the Gaussian kernel driven by those colorings.
//! - [`lower_bound`]: the scaled-canonical-basis construction showing that
//!   `Ω(1/ε²)` points are needed in high dimension.
//! - [`baselines`]: random sampling, sorted selection in one dimension and grid
//!   snapping.
//!
//! The crate is `no_std` (it needs `alloc`). The default `parallel` feature pulls
//! in `std` and rayon for data-parallel scans; every reduction is ordered so
//! results do not depend on the thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod discrepancy;
pub mod error;
pub mod herding;
pub mod kde;
pub mod kernels;
pub mod lower_bound;
pub mod points;

mod par;
mod sum;

pub use error::{Error, Result};
pub use kde::ErrorReport;
pub use kernels::{Kernel, KernelFamily, SteepnessWindow};
pub use points::{Coreset, CoresetView, Measure, PointSet, WeightedPoints};
