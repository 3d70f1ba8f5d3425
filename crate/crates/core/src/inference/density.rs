use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

/// Largest probability mass tolerated in either boundary cell of a grid.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-3;

/// Uniform quadrature grid over raw output values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridSpec<T> {
    pub lo: T,
    pub hi: T,
    pub n_points: usize,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(lo: T, hi: T, n_points: usize) -> Result<Self> {
        let g = Self { lo, hi, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Config(format!(
                "grid bounds [{}, {}] must be finite with lo < hi",
                self.lo, self.hi
            )));
        }
        if self.n_points < 16 {
            return Err(Error::Config(format!(
                "grid needs at least 16 points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> T {
        (self.hi - self.lo) / T::of((self.n_points - 1) as f64)
    }

    pub fn points(&self) -> Vec<T> {
        let h = self.step();
        (0..self.n_points)
            .map(|i| {
                if i + 1 == self.n_points {
                    self.hi
                } else {
                    self.lo + h * T::of(i as f64)
                }
            })
            .collect()
    }

    /// Same bounds with `2n − 1` points, so every old node is kept.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }
}

/// Unnormalized log-density `g(y, x)` of a conditional model, in raw units.
pub trait ConditionalEnergy<T: Scalar> {
    /// Per-regressor state reused across candidate outputs.
    type Query;

    fn prepare(&self, x: &[T]) -> Result<Self::Query>;

    fn energies(&self, query: &Self::Query, ys: &[T]) -> Result<Vec<T>>;

    /// `g(y, x)` and `∂g/∂y`.
    fn energy_and_slope(&self, query: &Self::Query, y: T) -> Result<(T, T)>;
}

/// Energy given by a closure `g(x, y)`; the slope is a central difference.
pub struct FnEnergy<F>(pub F);

impl<T: Scalar, F: Fn(&[T], T) -> T> ConditionalEnergy<T> for FnEnergy<F> {
    type Query = Vec<T>;

    fn prepare(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(x.to_vec())
    }

    fn energies(&self, x: &Vec<T>, ys: &[T]) -> Result<Vec<T>> {
        Ok(ys.iter().map(|&y| (self.0)(x, y)).collect())
    }

    fn energy_and_slope(&self, x: &Vec<T>, y: T) -> Result<(T, T)> {
        let eps = T::of(1e-6) * (T::one() + y.abs());
        let slope = ((self.0)(x, y + eps) - (self.0)(x, y - eps)) / (eps + eps);
        Ok(((self.0)(x, y), slope))
    }
}

/// Normalized density sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DensityGrid<T> {
    pub ys: Vec<T>,
    pub density: Vec<T>,
    pub log_partition: T,
}

#[inline]
fn trapezoid_weight<T: Scalar>(i: usize, n: usize) -> T {
    if i == 0 || i + 1 == n {
        T::of(0.5)
    } else {
        T::one()
    }
}

/// `ln ∫ exp(g) dy` by the trapezoidal rule on a uniform grid with step `h`,
/// evaluated as a log-sum-exp.
pub fn log_partition<T: Scalar>(energies: &[T], h: T) -> T {
    let n = energies.len();
    let terms = energies
        .iter()
        .enumerate()
        .map(move |(i, &g)| g + trapezoid_weight::<T>(i, n).ln());
    h.ln() + log_sum_exp(terms)
}

impl<T: Scalar> DensityGrid<T> {
    pub fn step(&self) -> T {
        self.ys[1] - self.ys[0]
    }

    /// Trapezoidal mass carried by node `i`.
    pub fn node_mass(&self, i: usize) -> T {
        self.density[i] * self.step() * trapezoid_weight(i, self.ys.len())
    }

    pub fn integral(&self) -> T {
        (0..self.ys.len()).map(|i| self.node_mass(i)).sum()
    }

    /// Larger of the two boundary node masses.
    pub fn boundary_mass(&self) -> T {
        let n = self.ys.len();
        self.node_mass(0).max(self.node_mass(n - 1))
    }

    pub fn mean(&self) -> T {
        (0..self.ys.len()).map(|i| self.node_mass(i) * self.ys[i]).sum()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        (0..self.ys.len())
            .map(|i| self.node_mass(i) * (self.ys[i] - m) * (self.ys[i] - m))
            .sum()
    }

    pub fn max_density(&self) -> T {
        self.density.iter().copied().fold(T::zero(), T::max)
    }

    /// Linear interpolation of the density at `y`; zero outside the grid.
    pub fn value_at(&self, y: T) -> T {
        let n = self.ys.len();
        if y < self.ys[0] || y > self.ys[n - 1] {
            return T::zero();
        }
        let pos = ((y - self.ys[0]) / self.step()).as_f64();
        let i = (pos.floor() as usize).min(n - 2);
        let frac = T::of(pos - i as f64);
        self.density[i] * (T::one() - frac) + self.density[i + 1] * frac
    }
}

/// Normalizes precomputed energies on `grid`; checks boundary mass.
pub fn density_from_energies<T: Scalar>(grid: &GridSpec<T>, ys: Vec<T>, energies: &[T]) -> Result<DensityGrid<T>> {
    if let Some(i) = energies.iter().position(|g| !g.is_finite()) {
        return Err(Error::Evaluation(format!(
            "non-finite energy at grid point y = {}",
            ys[i]
        )));
    }
    let log_z = log_partition(energies, grid.step());
    let density = energies.iter().map(|&g| (g - log_z).exp()).collect();
    let grid_density = DensityGrid {
        ys,
        density,
        log_partition: log_z,
    };
    let boundary = grid_density.boundary_mass().as_f64();
    if boundary > BOUNDARY_MASS_LIMIT {
        return Err(Error::GridTooNarrow {
            lo: grid.lo.as_f64(),
            hi: grid.hi.as_f64(),
            boundary_mass: boundary,
        });
    }
    Ok(grid_density)
}

/// Normalized predictive density `exp(g(y, x)) / Z(x)` on `grid`.
pub fn density<T: Scalar, E: ConditionalEnergy<T> + ?Sized>(
    model: &E,
    x: &[T],
    grid: &GridSpec<T>,
) -> Result<DensityGrid<T>> {
    grid.validate()?;
    let query = model.prepare(x)?;
    let ys = grid.points();
    let energies = model.energies(&query, &ys)?;
    density_from_energies(grid, ys, &energies)
}

/// Gaussian `N(mean, variance)` sampled on `grid` and renormalized by the
/// same quadrature as model densities.
pub fn gaussian_density<T: Scalar>(mean: T, variance: T, grid: &GridSpec<T>) -> Result<DensityGrid<T>> {
    grid.validate()?;
    if !(variance > T::zero()) {
        return Err(Error::Evaluation(format!(
            "Gaussian density needs positive variance, got {variance}"
        )));
    }
    let ys = grid.points();
    let two_var = variance + variance;
    let energies: Vec<T> = ys.iter().map(|&y| -(y - mean) * (y - mean) / two_var).collect();
    density_from_energies(grid, ys, &energies)
}
