use serde::{Deserialize, Serialize};

use super::density::{ConditionalEnergy, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gradient-ascent refinement of the best grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    /// Initial step λ; `None` means a tenth of the grid spacing.
    #[serde(default)]
    pub step: Option<f64>,
    pub iters: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            step: None,
            iters: 50,
        }
    }
}

/// Maximizer of `g(·, x)`: grid argmax refined by gradient ascent.
pub fn map_estimate<T: Scalar, E: ConditionalEnergy<T> + ?Sized>(
    model: &E,
    x: &[T],
    grid: &GridSpec<T>,
    ascent: &AscentConfig,
) -> Result<T> {
    grid.validate()?;
    let query = model.prepare(x)?;
    let ys = grid.points();
    let energies = model.energies(&query, &ys)?;
    let best = super::argmax(&energies);
    refine_map(model, &query, grid, ys[best], energies[best], ascent)
}

/// Runs `y ← y + λ ∂g/∂y` from `(start, g_start)`, halving λ whenever a step
/// would not increase `g`. The result stays in `[lo, hi]` and never has lower
/// energy than the start.
pub fn refine_map<T: Scalar, E: ConditionalEnergy<T> + ?Sized>(
    model: &E,
    query: &E::Query,
    grid: &GridSpec<T>,
    start: T,
    g_start: T,
    ascent: &AscentConfig,
) -> Result<T> {
    let mut lambda = match ascent.step {
        Some(s) if s > 0.0 => T::of(s),
        Some(s) => {
            return Err(Error::Config(format!("ascent step must be positive, got {s}")));
        }
        None => grid.step() / T::of(10.0),
    };
    let (mut y, mut g) = (start, g_start);
    let (_, mut slope) = model.energy_and_slope(query, y)?;
    for _ in 0..ascent.iters {
        if slope == T::zero() || !slope.is_finite() {
            break;
        }
        let candidate = (y + lambda * slope).max(grid.lo).min(grid.hi);
        let (g_new, slope_new) = model.energy_and_slope(query, candidate)?;
        if g_new > g {
            y = candidate;
            g = g_new;
            slope = slope_new;
        } else {
            lambda = lambda / T::of(2.0);
        }
    }
    Ok(y)
}
