//! Seeded synthetic point sets.

use std::fmt;
use std::str::FromStr;

use kde_coreset::PointSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Number of components in the mixture generator.
pub const MIXTURE_COMPONENTS: usize = 4;
/// Mixture centres are drawn uniformly from `[0, MIXTURE_SPREAD]^d`.
pub const MIXTURE_SPREAD: f64 = 3.0;
/// Per-axis standard deviation of each mixture component.
pub const MIXTURE_STD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Uniform on `[0, 1]^d`.
    Uniform,
    /// Equal-weight isotropic Gaussian mixture.
    Mixture,
}

impl FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Generator::Uniform),
            "mixture" => Ok(Generator::Mixture),
            other => Err(format!("unknown generator {other:?} (expected uniform or mixture)")),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Uniform => "uniform",
            Generator::Mixture => "mixture",
        })
    }
}

pub fn generate(kind: Generator, n: usize, d: usize, seed: u64) -> Result<PointSet, kde_coreset::Error> {
    if n == 0 || d == 0 {
        return Err(kde_coreset::Error::InvalidInput("synthetic data needs n >= 1 and d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = match kind {
        Generator::Uniform => (0..n * d).map(|_| rng.random::<f64>()).collect(),
        Generator::Mixture => {
            let centres: Vec<f64> = (0..MIXTURE_COMPONENTS * d).map(|_| rng.random::<f64>() * MIXTURE_SPREAD).collect();
            let noise = Normal::new(0.0, MIXTURE_STD).expect("valid deviation");
            let mut coords = Vec::with_capacity(n * d);
            for _ in 0..n {
                let c = rng.random_range(0..MIXTURE_COMPONENTS);
                for j in 0..d {
                    coords.push(centres[c * d + j] + noise.sample(&mut rng));
                }
            }
            coords
        }
    };
    PointSet::from_flat(coords, d)
}
