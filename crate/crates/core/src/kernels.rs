//! Shift-invariant kernels `K(x, p) = f(‖x − p‖)` normalized so `f(0) = 1`.

use core::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelFamily {
    /// `exp(−z²/σ²)`
    Gaussian,
    /// `exp(−z/σ)`
    Laplace,
    /// `max(0, 1 − z/σ)`
    Triangle,
    /// `1` if `z ≤ σ`, else `0`
    Ball,
    /// `max(0, 1 − (z/σ)²)`
    Epanechnikov,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Gaussian,
        KernelFamily::Laplace,
        KernelFamily::Triangle,
        KernelFamily::Ball,
        KernelFamily::Epanechnikov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
            KernelFamily::Triangle => "triangle",
            KernelFamily::Ball => "ball",
            KernelFamily::Epanechnikov => "epanechnikov",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A kernel family together with its bandwidth σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    bandwidth: f64,
}

/// A window `(z_f − r_f, z_f + r_f)` of the profile where it drops steeply
/// (slope at least `c_f`) or by a jump of at least `c_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteepnessWindow {
    pub z_f: f64,
    pub r_f: f64,
    pub c_f: f64,
}

impl SteepnessWindow {
    pub fn new(z_f: f64, r_f: f64, c_f: f64) -> Result<Self> {
        validate_window(z_f, r_f)?;
        if !(c_f > 0.0) || !c_f.is_finite() {
            return Err(Error::OutOfRange { what: "c_f", value: c_f });
        }
        Ok(Self { z_f, r_f, c_f })
    }

    pub fn lower(&self) -> f64 {
        self.z_f - self.r_f
    }

    pub fn upper(&self) -> f64 {
        self.z_f + self.r_f
    }
}

fn validate_window(z_f: f64, r_f: f64) -> Result<()> {
    if !(r_f > 0.0) || !r_f.is_finite() {
        return Err(Error::OutOfRange { what: "r_f", value: r_f });
    }
    if !(z_f > r_f) || !z_f.is_finite() {
        return Err(Error::OutOfRange { what: "z_f", value: z_f });
    }
    Ok(())
}

impl Kernel {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::OutOfRange { what: "bandwidth", value: bandwidth });
        }
        Ok(Self { family, bandwidth })
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, bandwidth)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Gaussian and Laplace kernels are characteristic: the kernel distance is
    /// a metric and bounds the L∞ error of the estimate.
    pub fn is_characteristic(&self) -> bool {
        matches!(self.family, KernelFamily::Gaussian | KernelFamily::Laplace)
    }

    /// Profile without argument checks. `z` must be non-negative.
    #[inline]
    pub(crate) fn profile_unchecked(&self, z: f64) -> f64 {
        let u = z / self.bandwidth;
        match self.family {
            KernelFamily::Gaussian => libm::exp(-u * u),
            KernelFamily::Laplace => libm::exp(-u),
            KernelFamily::Triangle => (1.0 - u).max(0.0),
            KernelFamily::Ball => {
                if u <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Epanechnikov => (1.0 - u * u).max(0.0),
        }
    }

    /// Kernel value from a squared distance, skipping the square root where
    /// the family allows it.
    #[inline]
    pub(crate) fn eval_sq_dist(&self, sq: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => libm::exp(-sq / (self.bandwidth * self.bandwidth)),
            KernelFamily::Epanechnikov => (1.0 - sq / (self.bandwidth * self.bandwidth)).max(0.0),
            KernelFamily::Ball => {
                if sq <= self.bandwidth * self.bandwidth {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.profile_unchecked(libm::sqrt(sq)),
        }
    }

    /// Kernel value for two points of equal dimension.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval_sq_dist(sq_dist(x, y))
    }

    /// The univariate profile `f(z)`.
    pub fn profile(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::OutOfRange { what: "profile argument", value: z });
        }
        Ok(self.profile_unchecked(z))
    }

    /// `K(x, y) = f(‖x − y‖)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        if x.is_empty() {
            return Err(Error::InvalidInput("points must have dimension >= 1"));
        }
        Ok(self.profile_unchecked(libm::sqrt(sq_dist(x, y))))
    }

    /// `−f′(z)` from the analytic derivative. For the piecewise families the
    /// left derivative is used at the kink `z = σ`.
    pub fn negative_slope(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::OutOfRange { what: "profile argument", value: z });
        }
        let s = self.bandwidth;
        let u = z / s;
        Ok(match self.family {
            KernelFamily::Gaussian => 2.0 * u / s * libm::exp(-u * u),
            KernelFamily::Laplace => libm::exp(-u) / s,
            KernelFamily::Triangle => {
                if u <= 1.0 {
                    1.0 / s
                } else {
                    0.0
                }
            }
            KernelFamily::Epanechnikov => {
                if u <= 1.0 {
                    2.0 * u / s
                } else {
                    0.0
                }
            }
            KernelFamily::Ball => {
                return Err(Error::UnsupportedKernel {
                    family: "ball",
                    reason: "profile is discontinuous at z = bandwidth",
                })
            }
        })
    }

    /// Infimum of `−f′` over `[z_f − r_f, z_f + r_f]`, packaged as a
    /// somewhere-steep window.
    pub fn steepness_constant(&self, z_f: f64, r_f: f64) -> Result<SteepnessWindow> {
        validate_window(z_f, r_f)?;
        let (lo, hi) = (z_f - r_f, z_f + r_f);
        let s = self.bandwidth;
        let c_f = match self.family {
            KernelFamily::Ball => {
                return Err(Error::UnsupportedKernel {
                    family: "ball",
                    reason: "not somewhere-steep; use drop_constant",
                })
            }
            // 2u·e^{−u²} rises then falls, so the minimum sits at an endpoint.
            KernelFamily::Gaussian => self.negative_slope(lo)?.min(self.negative_slope(hi)?),
            KernelFamily::Laplace => self.negative_slope(hi)?,
            KernelFamily::Triangle | KernelFamily::Epanechnikov => {
                if hi > s {
                    0.0
                } else {
                    self.negative_slope(lo)?.min(self.negative_slope(hi)?)
                }
            }
        };
        if !(c_f > 0.0) {
            return Err(Error::NotSteep { lo, hi });
        }
        SteepnessWindow::new(z_f, r_f, c_f)
    }

    /// Drop window of the ball kernel around its discontinuity `z_f = σ`.
    pub fn drop_constant(&self, z_f: f64, r_f: f64) -> Result<SteepnessWindow> {
        if self.family != KernelFamily::Ball {
            return Err(Error::UnsupportedKernel {
                family: self.family.name(),
                reason: "drop constants exist only for the ball kernel",
            });
        }
        validate_window(z_f, r_f)?;
        if (z_f - self.bandwidth).abs() > 1e-12 * self.bandwidth {
            return Err(Error::Hypothesis("drop window must be centred on the discontinuity z_f = bandwidth"));
        }
        SteepnessWindow::new(z_f, r_f, 1.0)
    }

    /// `sup_z |f′(z)|` in units of 1/length.
    pub fn lipschitz_constant(&self) -> Result<f64> {
        let s = self.bandwidth;
        match self.family {
            KernelFamily::Gaussian => Ok(core::f64::consts::SQRT_2 * libm::exp(-0.5) / s),
            KernelFamily::Laplace | KernelFamily::Triangle => Ok(1.0 / s),
            KernelFamily::Epanechnikov => Ok(2.0 / s),
            KernelFamily::Ball => Err(Error::UnsupportedKernel {
                family: "ball",
                reason: "unbounded Lipschitz factor",
            }),
        }
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}
