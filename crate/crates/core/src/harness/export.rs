use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{InferenceSettings, TrainedModel};
use crate::data::WindowDataset;
use crate::error::{Error, Result};
use crate::inference::PredictionSummary;

/// File names written by [`export_density_sequence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportPaths {
    /// Long-form `t,y,density` table.
    pub density_csv: PathBuf,
    /// Array of `{t, y_true, map, intervals}`.
    pub predictions_json: PathBuf,
}

#[derive(Serialize)]
struct Step {
    t: usize,
    y_true: f64,
    #[serde(flatten)]
    summary: PredictionSummary,
}

/// Writes the predictive density of every row of `data` on the inference
/// grid, plus its MAP and HDR intervals, into `out_dir`.
pub fn export_density_sequence(
    model: &TrainedModel,
    data: &WindowDataset<f64>,
    settings: &InferenceSettings,
    out_dir: impl AsRef<Path>,
) -> Result<ExportPaths> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut csv = String::from("t,y,density\n");
    let mut steps = Vec::with_capacity(data.len());
    for (r, (row, &y_true)) in data.x.outer_iter().zip(data.targets.iter()).enumerate() {
        let t = data.t0 + r;
        let p = model.predict(&row.to_vec(), settings)?;
        for (y, d) in p.grid.ys.iter().zip(&p.grid.density) {
            let _ = writeln!(csv, "{t},{y},{d}");
        }
        steps.push(Step {
            t,
            y_true,
            summary: p.summary(),
        });
    }
    let paths = ExportPaths {
        density_csv: out_dir.join("density.csv"),
        predictions_json: out_dir.join("predictions.json"),
    };
    fs::write(&paths.density_csv, csv).map_err(|e| Error::io(&paths.density_csv, e))?;
    let json = serde_json::to_string_pretty(&steps)?;
    fs::write(&paths.predictions_json, json).map_err(|e| Error::io(&paths.predictions_json, e))?;
    Ok(paths)
}
