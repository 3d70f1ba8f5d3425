use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

/// Noise distribution for NCE: `M` draws per target from an equal-weight
/// mixture of `K` Gaussians centred on the target (standardized units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NceConfig {
    pub num_noise: usize,
    pub sigmas: Vec<f64>,
    pub seed: u64,
}

impl Default for NceConfig {
    fn default() -> Self {
        Self {
            num_noise: 256,
            sigmas: vec![0.1, 0.8],
            seed: 0,
        }
    }
}

impl NceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_noise == 0 {
            return Err(Error::Config("NCE needs at least one noise sample".into()));
        }
        if self.sigmas.is_empty() {
            return Err(Error::Config("NCE noise mixture needs at least one component".into()));
        }
        if let Some(s) = self.sigmas.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Config(format!("noise std {s} must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NoiseMixture<T> {
    sigmas: Vec<T>,
    /// `−ln σ_k − ½ln 2π − ln K` per component.
    log_norms: Vec<T>,
}

impl<T: Scalar> NoiseMixture<T> {
    pub fn new(cfg: &NceConfig) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.sigmas.len() as f64;
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        Ok(Self {
            sigmas: cfg.sigmas.iter().map(|&s| T::of(s)).collect(),
            log_norms: cfg
                .sigmas
                .iter()
                .map(|&s| T::of(-s.ln() - half_ln_2pi - k.ln()))
                .collect(),
        })
    }

    pub fn log_density(&self, y: T, centre: T) -> T {
        let d = y - centre;
        let half = T::of(0.5);
        log_sum_exp(
            self.sigmas
                .iter()
                .zip(&self.log_norms)
                .map(|(&s, &c)| c - half * (d / s) * (d / s)),
        )
    }

    /// One draw and its exact log-density.
    pub fn sample<R: Rng + ?Sized>(&self, centre: T, rng: &mut R) -> (T, T) {
        let k = rng.random_range(0..self.sigmas.len());
        let z: f64 = StandardNormal.sample(rng);
        let y = centre + self.sigmas[k] * T::of(z);
        (y, self.log_density(y, centre))
    }
}

/// `cfg.num_noise` pairs `(sample, ln q(sample | centre))`.
pub fn sample_noise<T: Scalar, R: Rng + ?Sized>(centre: T, cfg: &NceConfig, rng: &mut R) -> Result<Vec<(T, T)>> {
    let mixture = NoiseMixture::new(cfg)?;
    Ok((0..cfg.num_noise).map(|_| mixture.sample(centre, rng)).collect())
}
