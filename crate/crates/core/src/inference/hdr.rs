use super::density::DensityGrid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Highest-density region at one credible level; possibly several intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrRegion<T> {
    pub level: f64,
    pub intervals: Vec<(T, T)>,
    /// Quadrature mass of the selected grid cells.
    pub mass: T,
}

impl<T: Scalar> HdrRegion<T> {
    pub fn contains(&self, y: T) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= y && y <= b)
    }
}

/// Highest-density regions of a gridded density.
///
/// Grid nodes are taken in order of decreasing density (ties by position)
/// until their mass reaches the level; runs of selected nodes become
/// intervals spanning half a cell on either side, clipped to the grid. All
/// levels share one ordering, so regions of lower levels nest in higher ones.
pub fn hdr_intervals<T: Scalar>(grid: &DensityGrid<T>, levels: &[f64]) -> Result<Vec<HdrRegion<T>>> {
    let n = grid.ys.len();
    if n < 2 {
        return Err(Error::Evaluation("density grid needs at least two points".into()));
    }
    if let Some(&bad) = levels.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::Config(format!("credible level {bad} must lie in (0, 1)")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        grid.density[b]
            .partial_cmp(&grid.density[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let total = grid.integral();
    let half = grid.step() / T::of(2.0);
    let (lo, hi) = (grid.ys[0], grid.ys[n - 1]);

    levels
        .iter()
        .map(|&level| {
            let target = T::of(level) * total;
            let mut selected = vec![false; n];
            let mut mass = T::zero();
            for &i in &order {
                if mass >= target {
                    break;
                }
                selected[i] = true;
                mass += grid.node_mass(i);
            }
            let mut intervals = Vec::new();
            let mut i = 0;
            while i < n {
                if selected[i] {
                    let start = i;
                    while i + 1 < n && selected[i + 1] {
                        i += 1;
                    }
                    intervals.push(((grid.ys[start] - half).max(lo), (grid.ys[i] + half).min(hi)));
                }
                i += 1;
            }
            Ok(HdrRegion {
                level,
                intervals,
                mass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{density, FnEnergy, GridSpec};

    fn grid_of(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> DensityGrid<f64> {
        let spec = GridSpec::new(lo, hi, n).unwrap();
        density(&FnEnergy(move |_: &[f64], y: f64| g(y)), &[], &spec).unwrap()
    }

    #[test]
    fn standard_normal_95() {
        let d = grid_of(|y| -y * y / 2.0, -8.0, 8.0, 4001);
        let h = d.step();
        let r = &hdr_intervals(&d, &[0.95]).unwrap()[0];
        assert_eq!(r.intervals.len(), 1);
        let (a, b) = r.intervals[0];
        assert!((a + 1.959964).abs() < 2.0 * h, "{a}");
        assert!((b - 1.959964).abs() < 2.0 * h, "{b}");
    }

    #[test]
    fn uniform_half_mass() {
        let d = grid_of(|_| 0.0, 0.0, 4.0, 1001);
        let r = &hdr_intervals(&d, &[0.5]).unwrap()[0];
        let width: f64 = r.intervals.iter().map(|(a, b)| b - a).sum();
        let tol = d.step() * d.max_density();
        assert!((r.mass - 0.5).abs() <= tol);
        assert!((width * 0.25 - 0.5).abs() <= tol + 1e-12, "{width}");
    }

    #[test]
    fn separated_bimodal_gives_two_intervals() {
        let d = grid_of(
            |y| {
                let a = (-(y - 2.0f64).powi(2) / (2.0 * 0.09)).exp();
                let b = (-(y + 2.0f64).powi(2) / (2.0 * 0.09)).exp();
                (a + b).ln()
            },
            -5.0,
            5.0,
            2001,
        );
        let r = &hdr_intervals(&d, &[0.65]).unwrap()[0];
        assert_eq!(r.intervals.len(), 2);
        assert!(r.contains(2.0) && r.contains(-2.0) && !r.contains(0.0));
    }

    #[test]
    fn levels_nest() {
        let d = grid_of(|y| (0.3 * (-(y - 1.0f64).powi(2) * 8.0).exp() + (-(y * y)).exp()).ln(), -6.0, 6.0, 999);
        let regions = hdr_intervals(&d, &[0.65, 0.95, 0.99]).unwrap();
        for w in regions.windows(2) {
            for &(a, b) in &w[0].intervals {
                assert!(w[1].intervals.iter().any(|&(c, e)| c <= a && b <= e));
            }
            assert!(w[0].mass <= w[1].mass);
        }
    }

    #[test]
    fn rejects_bad_level() {
        let d = grid_of(|y| -y * y, -5.0, 5.0, 100);
        assert!(hdr_intervals(&d, &[1.0]).is_err());
    }
}
