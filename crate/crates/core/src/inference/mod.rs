//! Predictive densities on a grid, MAP estimation and highest-density regions.

mod density;
mod hdr;
mod map;

pub use density::{
    density, density_from_energies, gaussian_density, log_partition, ConditionalEnergy,
    DensityGrid, FnEnergy, GridSpec, BOUNDARY_MASS_LIMIT,
};
pub use hdr::{hdr_intervals, HdrRegion};
pub use map::{map_estimate, refine_map, AscentConfig};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Scalar;

/// Credible levels drawn as shaded regions.
pub const DEFAULT_LEVELS: [f64; 3] = [0.65, 0.95, 0.99];

/// Density, MAP point and HDR intervals for one regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub map: T,
    pub regions: Vec<HdrRegion<T>>,
    pub grid: DensityGrid<T>,
}

/// JSON shape: `{"map": .., "intervals": {"0.65": [[a, b], ..], ..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSummary {
    pub map: f64,
    pub intervals: BTreeMap<String, Vec<[f64; 2]>>,
}

pub fn level_key(level: f64) -> String {
    format!("{level}")
}

impl<T: Scalar> Prediction<T> {
    pub fn summary(&self) -> PredictionSummary {
        PredictionSummary {
            map: self.map.as_f64(),
            intervals: self
                .regions
                .iter()
                .map(|r| {
                    (
                        level_key(r.level),
                        r.intervals.iter().map(|&(a, b)| [a.as_f64(), b.as_f64()]).collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn region(&self, level: f64) -> Option<&HdrRegion<T>> {
        self.regions.iter().find(|r| (r.level - level).abs() < 1e-12)
    }
}

/// Density, refined MAP and HDR intervals in one pass over the grid.
pub fn predict<T: Scalar, E: ConditionalEnergy<T> + ?Sized>(
    model: &E,
    x: &[T],
    grid: &GridSpec<T>,
    ascent: &AscentConfig,
    levels: &[f64],
) -> Result<Prediction<T>> {
    grid.validate()?;
    let query = model.prepare(x)?;
    let ys = grid.points();
    let energies = model.energies(&query, &ys)?;
    let best = argmax(&energies);
    let map = refine_map(model, &query, grid, ys[best], energies[best], ascent)?;
    let density = density_from_energies(grid, ys, &energies)?;
    let regions = hdr_intervals(&density, levels)?;
    Ok(Prediction {
        map,
        regions,
        grid: density,
    })
}

pub(crate) fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
