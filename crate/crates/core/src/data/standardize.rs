use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::window::WindowDataset;
use crate::error::{Error, Result};
use crate::inference::GridSpec;
use crate::scalar::Scalar;

/// Per-column affine scaling fitted on a training split.
///
/// Standard deviations use the population (divide-by-N) convention. The
/// observed target range is kept for default density grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardizer<T> {
    pub mean_x: Vec<T>,
    pub std_x: Vec<T>,
    pub mean_y: T,
    pub std_y: T,
    pub min_y: T,
    pub max_y: T,
}

fn moments<T: Scalar>(col: ArrayView1<T>) -> (T, T) {
    let n = T::of(col.len() as f64);
    let mean = col.sum() / n;
    let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

impl<T: Scalar> Standardizer<T> {
    /// Fits on `train`. Constant columns (including the target) are an error.
    pub fn fit(train: &WindowDataset<T>) -> Result<Self> {
        Self::fit_inner(train, false)
    }

    /// Like [`fit`](Self::fit) but a constant target gets unit scale.
    pub fn fit_allow_constant_target(train: &WindowDataset<T>) -> Result<Self> {
        Self::fit_inner(train, true)
    }

    fn fit_inner(train: &WindowDataset<T>, allow_constant_target: bool) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::Input(format!(
                "standardizer needs at least 2 rows, got {}",
                train.len()
            )));
        }
        let mut mean_x = Vec::with_capacity(train.x.ncols());
        let mut std_x = Vec::with_capacity(train.x.ncols());
        for (k, col) in train.x.columns().into_iter().enumerate() {
            let (m, s) = moments(col);
            if !(s > T::zero()) {
                return Err(Error::Input(format!("regressor column x_{} is constant", k + 1)));
            }
            mean_x.push(m);
            std_x.push(s);
        }
        let (mean_y, mut std_y) = moments(train.targets.view());
        if !(std_y > T::zero()) {
            if !allow_constant_target {
                return Err(Error::Input("target column y is constant".into()));
            }
            std_y = T::one();
        }
        let min_y = train.targets.iter().copied().fold(T::infinity(), T::min);
        let max_y = train.targets.iter().copied().fold(T::neg_infinity(), T::max);
        Ok(Self {
            mean_x,
            std_x,
            mean_y,
            std_y,
            min_y,
            max_y,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean_x.len()
    }

    pub fn apply_x(&self, x: ArrayView1<T>) -> Result<Array1<T>> {
        if x.len() != self.dim() {
            return Err(Error::Input(format!(
                "regressor has length {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(x.iter()
            .zip(self.mean_x.iter().zip(&self.std_x))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }

    pub fn apply_x_rows(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.dim() {
            return Err(Error::Input(format!(
                "regressors have {} columns, expected {}",
                x.ncols(),
                self.dim()
            )));
        }
        let mut out = x.to_owned();
        for mut row in out.outer_iter_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean_x).zip(&self.std_x) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn invert_x(&self, x: ArrayView1<T>) -> Array1<T> {
        x.iter()
            .zip(self.mean_x.iter().zip(&self.std_x))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect()
    }

    /// Density grid `[min_y − 3σ_y, max_y + 3σ_y]` over the training targets.
    pub fn default_grid(&self, n_points: usize) -> Result<GridSpec<T>> {
        self.padded_grid(3.0, n_points)
    }

    /// `[min_y − c·σ_y, max_y + c·σ_y]` with `n_points` nodes.
    pub fn padded_grid(&self, padding: f64, n_points: usize) -> Result<GridSpec<T>> {
        if !(padding >= 0.0 && padding.is_finite()) {
            return Err(Error::Config(format!("grid padding must be non-negative, got {padding}")));
        }
        let pad = T::of(padding) * self.std_y;
        GridSpec::new(self.min_y - pad, self.max_y + pad, n_points)
    }

    #[inline]
    pub fn apply_y(&self, y: T) -> T {
        (y - self.mean_y) / self.std_y
    }

    #[inline]
    pub fn invert_y(&self, y: T) -> T {
        y * self.std_y + self.mean_y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::WindowConfig;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn dataset(x: Array2<f64>, y: Array1<f64>) -> WindowDataset<f64> {
        WindowDataset {
            x,
            targets: y,
            t0: 1,
            window: WindowConfig { dy: 1, du: 1 },
        }
    }

    #[test]
    fn population_std_of_targets() {
        let d = dataset(array![[0.0, 1.0], [1.0, 0.0]], array![0.0, 2.0]);
        let s = Standardizer::fit(&d).unwrap();
        assert_eq!(s.mean_y, 1.0);
        // divisor N: ((0-1)² + (2-1)²) / 2 = 1
        assert_eq!(s.std_y, 1.0);
    }

    #[test]
    fn constant_column_is_named() {
        let d = dataset(array![[0.0, 1.0], [1.0, 1.0]], array![0.0, 2.0]);
        let err = Standardizer::fit(&d).unwrap_err();
        assert!(err.to_string().contains("x_2"), "{err}");
        let c = dataset(array![[0.0, 1.0], [1.0, 2.0]], array![3.0, 3.0]);
        assert!(Standardizer::fit(&c).is_err());
        let s = Standardizer::fit_allow_constant_target(&c).unwrap();
        assert_eq!((s.mean_y, s.std_y), (3.0, 1.0));
    }

    #[test]
    fn needs_two_rows() {
        let d = dataset(array![[0.0, 1.0]], array![0.0]);
        assert!(Standardizer::fit(&d).is_err());
    }

    #[test]
    fn round_trip_and_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_simple_fn((200, 3), || rng.random_range(-5.0..20.0));
        let y = Array1::from_shape_simple_fn(200, || rng.random_range(-3.0..3.0) * 7.0);
        let d = dataset(x, y);
        let s = Standardizer::fit(&d).unwrap();
        for row in d.x.outer_iter() {
            let back = s.invert_x(s.apply_x(row).unwrap().view());
            for (a, b) in back.iter().zip(row) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let z: Vec<f64> = d.targets.iter().map(|&v| s.apply_y(v)).collect();
        for (&v, &zv) in d.targets.iter().zip(&z) {
            assert!((s.invert_y(zv) - v).abs() < 1e-12);
        }
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(m.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        let xs = s.apply_x_rows(d.x.view()).unwrap();
        for col in xs.columns() {
            let (m, sd) = moments(col);
            assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
        }
    }
}
