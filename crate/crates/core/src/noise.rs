//! Seeded samplers for the measurement-noise families used in the studies:
//! Gaussian, Gaussian mixture, Laplace and Cauchy.
//!
//! Every stochastic element in the crate draws from an [`RngStream`], a
//! ChaCha8 generator seeded from a 64-bit integer, so identical seeds give
//! bit-identical sequences on every platform.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Deterministic uniform source.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream sharing the seed, selected by `stream`.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Inverse-CDF Cauchy sample `beta + alpha * tan(pi (u - 1/2))`.
/// Returns `None` at the poles `u = 0` and `u = 1`.
pub fn sample_cauchy(beta: f64, alpha: f64, u: f64) -> Option<f64> {
    if u <= 0.0 || u >= 1.0 {
        return None;
    }
    Some(beta + alpha * (PI * (u - 0.5)).tan())
}

/// Inverse-CDF Laplace sample `mu - b sgn(u) ln(1 - 2|u|)` for `u` in
/// (-1/2, 1/2]. Returns `None` at `|u| = 1/2` where the logarithm diverges.
pub fn sample_laplace(mu: f64, b: f64, u: f64) -> Option<f64> {
    if u.abs() >= 0.5 || u.is_nan() {
        return None;
    }
    let sgn = if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    };
    Some(mu - b * sgn * (1.0 - 2.0 * u.abs()).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

fn validate_mixture(components: &[MixtureComponent]) -> Result<()> {
    if components.is_empty() {
        return Err(invalid("gaussian mixture needs at least one component"));
    }
    for c in components {
        if !(c.weight > 0.0) {
            return Err(invalid(format!("mixture weight must be positive, got {}", c.weight)));
        }
        if !(c.variance > 0.0) {
            return Err(invalid(format!("mixture variance must be positive, got {}", c.variance)));
        }
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("mixture weights must sum to 1, got {total}")));
    }
    Ok(())
}

/// Draws a component by weight, then a Gaussian from it.
pub fn sample_mixture(components: &[MixtureComponent], rng: &mut RngStream) -> Result<f64> {
    validate_mixture(components)?;
    Ok(draw_mixture(components, rng))
}

fn draw_mixture(components: &[MixtureComponent], rng: &mut RngStream) -> f64 {
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut chosen = components[components.len() - 1];
    for c in components {
        acc += c.weight;
        if u < acc {
            chosen = *c;
            break;
        }
    }
    chosen.mean + chosen.variance.sqrt() * rng.standard_normal()
}

/// Noise distribution of one measurement channel class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian { mean: f64, std: f64 },
    GaussianMixture { components: Vec<MixtureComponent> },
    Laplace { mu: f64, b: f64 },
    Cauchy { beta: f64, alpha: f64 },
}

impl NoiseSpec {
    pub const KINDS: [&'static str; 4] = ["gaussian", "gaussian_mixture", "laplace", "cauchy"];

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Gaussian { std, .. } if !(*std > 0.0) => {
                Err(invalid(format!("gaussian std must be positive, got {std}")))
            }
            NoiseSpec::GaussianMixture { components } => validate_mixture(components),
            NoiseSpec::Laplace { b, .. } if !(*b > 0.0) => {
                Err(invalid(format!("laplace scale must be positive, got {b}")))
            }
            NoiseSpec::Cauchy { alpha, .. } if !(*alpha > 0.0) => {
                Err(invalid(format!("cauchy scale must be positive, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    /// Assumes a validated spec.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            NoiseSpec::Gaussian { mean, std } => mean + std * rng.standard_normal(),
            NoiseSpec::GaussianMixture { components } => draw_mixture(components, rng),
            NoiseSpec::Laplace { mu, b } => loop {
                if let Some(v) = sample_laplace(*mu, *b, 0.5 - rng.uniform()) {
                    break v;
                }
            },
            NoiseSpec::Cauchy { beta, alpha } => loop {
                if let Some(v) = sample_cauchy(*beta, *alpha, rng.uniform_open()) {
                    break v;
                }
            },
        }
    }

    /// Variance of the distribution; `None` for the Cauchy family.
    pub fn variance(&self) -> Option<f64> {
        match self {
            NoiseSpec::Gaussian { std, .. } => Some(std * std),
            NoiseSpec::GaussianMixture { components } => {
                let mean: f64 = components.iter().map(|c| c.weight * c.mean).sum();
                Some(
                    components
                        .iter()
                        .map(|c| c.weight * (c.variance + (c.mean - mean).powi(2)))
                        .sum(),
                )
            }
            NoiseSpec::Laplace { b, .. } => Some(2.0 * b * b),
            NoiseSpec::Cauchy { .. } => None,
        }
    }

    pub fn gaussian(std: f64) -> Self {
        NoiseSpec::Gaussian { mean: 0.0, std }
    }
}
