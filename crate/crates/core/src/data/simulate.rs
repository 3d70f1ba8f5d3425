//! Simulated benchmark systems. Every generator is a pure function of its
//! parameters and seed; recursions start from a zero state.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::series::{IoSeries, SeriesMeta};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const AR_COEFFICIENT: f64 = 0.95;

/// `(weight, std)` components of the zero-mean ARX noise mixture.
pub const ARX_NOISE_MIXTURE: [(f64, f64); 2] = [(0.6, 0.1), (0.4, 0.3)];

/// Noise families for the first-order AR system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// N(0, 0.2²)
    Gaussian,
    /// ½N(0.4, 0.1²) + ½N(−0.4, 0.1²)
    Bimodal,
    /// Cauchy with location 0 and scale 0.2
    Cauchy,
    /// N(0, 0.3²) when |y_{t−1}| < 0.5, otherwise N(0, 0.05²)
    StateDependent,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Bimodal => "bimodal",
            NoiseKind::Cauchy => "cauchy",
            NoiseKind::StateDependent => "state_dependent",
        }
    }

    fn draw<R: Rng + ?Sized>(self, prev_y: f64, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match self {
            NoiseKind::Gaussian => 0.2 * z,
            NoiseKind::Bimodal => {
                let centre = if rng.random::<bool>() { 0.4 } else { -0.4 };
                centre + 0.1 * z
            }
            NoiseKind::Cauchy => Cauchy::new(0.0, 0.2).expect("valid scale").sample(rng),
            NoiseKind::StateDependent => {
                if prev_y.abs() < 0.5 {
                    0.3 * z
                } else {
                    0.05 * z
                }
            }
        }
    }
}

/// `y_t = 0.95 y_{t−1} + e_t` for `t = 1..len`, where `noise` maps the previous
/// output to `e_t`.
pub fn ar_recursion(y0: f64, len: usize, mut noise: impl FnMut(f64) -> f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(len);
    if len == 0 {
        return y;
    }
    y.push(y0);
    for t in 1..len {
        let prev = y[t - 1];
        y.push(AR_COEFFICIENT * prev + noise(prev));
    }
    y
}

/// `y_t = 1.5y_{t−1} − 0.7y_{t−2} + u_{t−1} + 0.5u_{t−2} + e_t`, with the
/// first two outputs given.
pub fn arx_recursion(y_init: [f64; 2], u: &[f64], e: &[f64]) -> Vec<f64> {
    let len = u.len();
    let mut y = Vec::with_capacity(len);
    y.extend(y_init.iter().take(len));
    for t in 2..len {
        y.push(1.5 * y[t - 1] - 0.7 * y[t - 2] + u[t - 1] + 0.5 * u[t - 2] + e[t]);
    }
    y
}

/// Noise-free one-step map of the Chen nonlinear benchmark.
#[inline]
pub fn chen_step(y1: f64, y2: f64, u1: f64, u2: f64) -> f64 {
    let decay = (-y1 * y1).exp();
    (0.8 - 0.5 * decay) * y1 - (0.3 + 0.9 * decay) * y2 + u1 + 0.2 * u2 + 0.1 * u1 * u2
}

/// Latent Chen trajectory from zero initial state with process noise `v`.
pub fn chen_recursion(u: &[f64], v: &[f64]) -> Vec<f64> {
    let len = u.len();
    let mut y = vec![0.0; len];
    for t in 2..len {
        y[t] = chen_step(y[t - 1], y[t - 2], u[t - 1], u[t - 2]) + v[t];
    }
    y
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn standard_normals<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn cast_vec<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::of(x)).collect()
}

fn meta(name: &str, params: &[(&str, f64)], seed: u64) -> SeriesMeta {
    SeriesMeta::Generator {
        name: name.to_string(),
        params: params
            .iter()
            .map(|&(k, v)| (k.to_string(), v))
            .collect::<BTreeMap<_, _>>(),
        seed,
    }
}

/// Autonomous AR(1) system; `u` is all zeros.
pub fn simulate_ar<T: Scalar>(kind: NoiseKind, len: usize, seed: u64) -> Result<IoSeries<T>> {
    if len < 2 {
        return Err(Error::Input(format!("AR simulation needs at least 2 samples, got {len}")));
    }
    let mut rng = rng_for(seed);
    let y = ar_recursion(0.0, len, |prev| kind.draw(prev, &mut rng));
    Ok(IoSeries {
        u: vec![T::zero(); len],
        y: cast_vec(&y),
        meta: SeriesMeta::Generator {
            name: format!("ar_{}", kind.name()),
            params: BTreeMap::new(),
            seed,
        },
    })
}

pub(crate) fn arx_noise<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let pick: f64 = rng.random();
    let std = if pick < ARX_NOISE_MIXTURE[0].0 {
        ARX_NOISE_MIXTURE[0].1
    } else {
        ARX_NOISE_MIXTURE[1].1
    };
    std * z
}

/// Second-order linear ARX system with Gaussian-mixture noise and
/// standard-normal input.
pub fn simulate_arx<T: Scalar>(len: usize, seed: u64) -> Result<IoSeries<T>> {
    if len < 3 {
        return Err(Error::Input(format!("ARX simulation needs at least 3 samples, got {len}")));
    }
    let mut rng = rng_for(seed);
    let u = standard_normals(len, &mut rng);
    let e: Vec<f64> = (0..len).map(|_| arx_noise(&mut rng)).collect();
    let y = arx_recursion([0.0, 0.0], &u, &e);
    Ok(IoSeries {
        u: cast_vec(&u),
        y: cast_vec(&y),
        meta: meta("arx", &[], seed),
    })
}

/// Chen system output together with its noise-free-measurement state.
#[derive(Debug, Clone)]
pub struct ChenSimulation<T> {
    pub series: IoSeries<T>,
    pub latent: Vec<T>,
}

pub fn simulate_chen_detailed<T: Scalar>(
    len: usize,
    sigma_v: f64,
    sigma_w: f64,
    seed: u64,
) -> Result<ChenSimulation<T>> {
    if len < 3 {
        return Err(Error::Input(format!("Chen simulation needs at least 3 samples, got {len}")));
    }
    if !(sigma_v >= 0.0 && sigma_w >= 0.0) {
        return Err(Error::Input(format!(
            "noise levels must be non-negative, got sigma_v={sigma_v}, sigma_w={sigma_w}"
        )));
    }
    let mut rng = rng_for(seed);
    let u = standard_normals(len, &mut rng);
    let process = Normal::new(0.0, sigma_v).expect("checked sigma");
    let measurement = Normal::new(0.0, sigma_w).expect("checked sigma");
    let v: Vec<f64> = (0..len).map(|_| process.sample(&mut rng)).collect();
    let latent = chen_recursion(&u, &v);
    let y: Vec<f64> = latent.iter().map(|&s| s + measurement.sample(&mut rng)).collect();
    Ok(ChenSimulation {
        series: IoSeries {
            u: cast_vec(&u),
            y: cast_vec(&y),
            meta: meta("chen", &[("sigma_v", sigma_v), ("sigma_w", sigma_w)], seed),
        },
        latent: cast_vec(&latent),
    })
}

pub fn simulate_chen<T: Scalar>(len: usize, sigma_v: f64, sigma_w: f64, seed: u64) -> Result<IoSeries<T>> {
    simulate_chen_detailed(len, sigma_v, sigma_w, seed).map(|s| s.series)
}
